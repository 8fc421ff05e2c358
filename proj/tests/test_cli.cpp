#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = UWBNLI_CLI;
const fs::path kScenarios = UWBNLI_SCENARIO_DIR;

struct Run {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const char* tag = "") {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    auto d = fs::temp_directory_path() / (std::string("uwbnli_cli_") + tag + info->name());
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Run run(const std::string& args) {
    const auto d = scratch("io_");
    const std::string cmd = kCli + " " + args + " >" + (d / "out").string() + " 2>" + (d / "err").string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(d / "out");
    r.err = slurp(d / "err");
    return r;
}

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream is(csv);
    for (std::string line; std::getline(is, line);)
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

std::string scenario(const char* name) { return (kScenarios / name).string(); }

} // namespace

TEST(Cli, ReportHasOneRowPerChannelPlusTotal) {
    const auto r = run("report --scenario " + scenario("five_channel_flat.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = data_lines(r.out);
    ASSERT_EQ(lines.size(), 1u + 5u + 1u);
    EXPECT_EQ(lines[0].rfind("channel,band,f_THz", 0), 0u);
    EXPECT_EQ(lines.back().rfind("total", 0), 0u);
    EXPECT_NE(r.out.find("# scenario_hash: fnv1a64:"), std::string::npos);
}

TEST(Cli, OutputIsByteIdenticalAcrossRuns) {
    const auto a = run("report --scenario " + scenario("five_channel_flat.json"));
    const auto b = run("report --scenario " + scenario("five_channel_flat.json") + " --threads 3");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, WritesFilesIntoOutDirectory) {
    const auto dir = scratch() / "results";
    const auto r = run("nli --scenario " + scenario("single_channel_c.json") + " --out " + dir.string() + " --format json");
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(dir / "nli.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "nli.json"));
    EXPECT_EQ(j["metadata"]["command"], "nli");
    EXPECT_FALSE(j["rows"].empty());
}

TEST(Cli, PropagateAndFitProduceTables) {
    for (const char* cmd : {"propagate", "fit"}) {
        const auto r = run(std::string(cmd) + " --scenario " + scenario("five_channel_flat.json") + " --ode-step 500");
        ASSERT_EQ(r.code, 0) << cmd << r.err;
        EXPECT_GT(data_lines(r.out).size(), 5u) << cmd;
    }
}

TEST(Cli, ValidateAgreesWithOracle) {
    const auto r = run("validate --scenario " + scenario("five_channel_flat.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = data_lines(r.out);
    ASSERT_EQ(lines.size(), 6u);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const double delta = std::stod(lines[i].substr(lines[i].rfind(',') + 1));
        EXPECT_LE(std::abs(delta), 1.0) << lines[i];
    }
}

TEST(Cli, OptimizeWritesPolicyAndReport) {
    const auto dir = scratch() / "opt";
    const auto r = run("optimize --scenario " + scenario("single_channel_c.json") + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "policy.csv"));
    EXPECT_TRUE(fs::exists(dir / "report.csv"));
}

TEST(Cli, UnknownSubcommandIsUsageError) {
    const auto r = run("frobnicate --scenario x.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("uwbnli: error kind=usage"), std::string::npos);
}

TEST(Cli, MissingScenarioIsUsageError) {
    EXPECT_EQ(run("report").code, 2);
    EXPECT_EQ(run("report --scenario /nonexistent/file.json").code, 2);
}

TEST(Cli, ConfigErrorLine) {
    const auto dir = scratch();
    std::ofstream(dir / "bad.json") << R"({"spans":[{"fiber":{"length_km":-5}}],"channels":[{"frequency_thz":193.4}]})";
    const auto r = run("report --scenario " + (dir / "bad.json").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("uwbnli: error kind=config path=/spans/0/fiber message=\"", 0), 0u) << r.err;
}

TEST(Cli, ValidateRefusesRamanFiber) {
    const auto r = run("validate --scenario " + scenario("single_channel_c.json"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("kind=range"), std::string::npos) << r.err;
}
