#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "uwbnli/scenario_io.hpp"

using namespace uwbnli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = UWBNLI_SCENARIO_DIR;

std::string config_path_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("uwbnli_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                           "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

} // namespace

TEST(ParseScenario, MinimalDocument) {
    const auto s = parse_scenario(std::string(R"({"spans":[{"fiber":{"length_km":80}}],
        "channels":[{"frequency_thz":193.4,"launch_power_dbm":0}]})"));
    ASSERT_EQ(s.spans.size(), 1u);
    EXPECT_EQ(s.spans[0].fiber.length_km, 80.0);
    EXPECT_EQ(s.spans[0].fiber.beta4, defaults::kBeta4);
    ASSERT_EQ(s.channels.size(), 1u);
    EXPECT_EQ(s.channels[0].symbol_rate_gbaud, 64.0);
    EXPECT_NEAR(*s.channels[0].launch_power_w, 1e-3, 1e-18);
}

TEST(ParseScenario, ExplicitDispersionZeroesOmittedOrders) {
    const auto s = parse_scenario(std::string(R"({"spans":[{"fiber":{"beta2_ps2_per_km":-21.3,"beta3_ps3_per_km":0.12}}],
        "channels":[{"frequency_thz":193.4,"launch_power_w":0.001}]})"));
    EXPECT_EQ(s.spans[0].fiber.beta2, -21.3);
    EXPECT_EQ(s.spans[0].fiber.beta3, 0.12);
    EXPECT_EQ(s.spans[0].fiber.beta4, 0.0);
}

TEST(ParseScenario, RepeatExpandsSpans) {
    const auto s = parse_scenario(std::string(R"({"spans":[{"repeat":3},{"fiber":{"length_km":50}}],
        "channels":[{"frequency_thz":193.4,"launch_power_w":0.001}]})"));
    ASSERT_EQ(s.spans.size(), 4u);
    EXPECT_EQ(s.spans[2].fiber.length_km, 100.0);
    EXPECT_EQ(s.spans[3].fiber.length_km, 50.0);
}

TEST(ParseScenario, ChannelOutsideBandsIsRejected) {
    try {
        parse_scenario(std::string(R"({"spans":[{}],"channels":[{"frequency_thz":300,"launch_power_w":0.001}]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("channel outside all bands"), std::string::npos);
    }
}

TEST(ParseScenario, ErrorsCarryJsonPointer) {
    EXPECT_EQ(config_path_of(R"({"spans":[{"fibre":{}}],"channels":[{"frequency_thz":193.4}]})"), "/spans/0/fibre");
    EXPECT_EQ(config_path_of(R"({"spans":[{"fiber":{"length_km":"long"}}],"channels":[{"frequency_thz":193.4}]})"),
              "/spans/0/fiber/length_km");
    EXPECT_EQ(config_path_of(R"({"spans":[{}],"channels":[{"frequency_thz":193.4,"launch_power_w":0.001,"launch_power_dbm":0}]})"),
              "/channels/0");
    EXPECT_EQ(config_path_of(R"({"channels":[{"frequency_thz":193.4}]})"), "/spans");
    EXPECT_EQ(config_path_of(R"({"spans":[{}]})"), "/channels");
    EXPECT_EQ(config_path_of(R"({"spans":[{}],"channels":[{"frequency_thz":193.4}],"optimizer":{"mode":"greedy"}})"),
              "/optimizer/mode");
    EXPECT_EQ(config_path_of(R"({"spans":[{"fiber":{"raman":{"model":"lorentz"}}}],"channels":[{"frequency_thz":193.4}]})"),
              "/spans/0/fiber/raman/model");
    EXPECT_EQ(config_path_of(R"({"spans":[{}],"grid":{"fill_count":3},"channels":[{"frequency_thz":193.4}]})"),
              "/grid/fill_count");
    EXPECT_EQ(config_path_of("{not json"), "");
}

TEST(ParseScenario, GridFillCount) {
    const auto s = parse_scenario(std::string(R"({"spans":[{}],"grid":{"fill_count":60,"launch_power_dbm":-1}})"));
    ASSERT_EQ(s.channels.size(), 60u);
    EXPECT_NEAR(*s.channels[0].launch_power_w, dbm_to_watt(-1.0), 1e-15);
    EXPECT_LT(s.channels.front().frequency_thz, 191.6); // three L channels
}

TEST(ParseScenario, LossAndRamanFiles) {
    TempDir t;
    t.write("loss.csv", "# attenuation\nfrequency_thz,loss_db_per_km\n180,0.25\n200,0.19\n240,0.21\n");
    t.write("raman.tsv", "pump_thz\tshift_thz\tgain\n190\t0\t0\n190\t13\t0.4\n190\t40\t0\n"
                         "200\t0\t0\n200\t13\t0.5\n200\t40\t0\n");
    const auto f = t.write("s.json", R"({"spans":[{"fiber":{"loss_file":"loss.csv",
        "raman":{"model":"measured","scaling":"none","file":"raman.tsv"}}}],
        "channels":[{"frequency_thz":193.4,"launch_power_w":0.001}]})");
    const auto s = load_scenario(f);
    EXPECT_NEAR(attenuation(s.spans[0].fiber, 190.0), 0.22 / kDbPerFieldNeper, 1e-14);
    EXPECT_NEAR(raman_gain(s.spans[0].fiber.raman, 195.0, 13.0), 0.45, 1e-14);

    t.write("bad.csv", "frequency_thz,loss\n180,0.2\n");
    const auto g = t.write("b.json", R"({"spans":[{"fiber":{"loss_file":"bad.csv"}}],
        "channels":[{"frequency_thz":193.4}]})");
    try {
        load_scenario(g);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "/spans/0/fiber/loss_file");
    }
}

TEST(SerializeScenario, RoundTrip) {
    for (const char* name : {"single_channel_c.json", "five_channel_flat.json", "case_study.json", "c_band_ten_spans.json"}) {
        const auto s = load_scenario(kScenarios / name);
        const auto text = serialize_scenario(s);
        const auto back = parse_scenario(text);
        EXPECT_EQ(back, s) << name;
        EXPECT_EQ(serialize_scenario(back), text) << name;
    }
}

TEST(SerializeScenario, RoundTripKeepsCustomTables) {
    Scenario s;
    s.spans.assign(2, Span{});
    s.spans[1].fiber.effective_area = LinearTable({180.0, 240.0}, {85.0, 70.0});
    s.spans[1].fiber.raman.scaling = RamanScaling::None;
    s.spans[1].fiber.raman.form = RamanModel::Measured{{190.0}, {0.0, 13.0, 30.0}, {0.0, 0.4, 0.0}};
    s.channels = build_comb(193.0, 3, 100.0, 48.0);
    for (auto& c : s.channels) c.launch_power_w = 2e-3;
    s.transceiver = TransceiverCurve{{{5.0, 1.0}, {20.0, 6.0}}};
    s.optimizer.mode = OptimizerMode::BandByBand;
    s.solver.series_cap = 12;
    EXPECT_EQ(parse_scenario(serialize_scenario(s)), s);
}

TEST(LoadScenario, CaseStudyFixture) {
    const auto s = load_scenario(kScenarios / "case_study.json");
    EXPECT_EQ(s.spans.size(), 10u);
    EXPECT_EQ(s.channels.size(), 552u);
    ASSERT_TRUE(s.grid.has_value());
    EXPECT_EQ(s.optimizer.sweep_increment, 10);
}

TEST(LoadScenario, MissingFile) { EXPECT_THROW(load_scenario(kScenarios / "nope.json"), ConfigError); }
