#pragma once

#include "uwbnli/error.hpp"
#include "uwbnli/units.hpp"
#include "uwbnli/table.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/transceiver.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/raman_solver.hpp"
#include "uwbnli/profile_fit.hpp"
#include "uwbnli/nli.hpp"
#include "uwbnli/gn_oracle.hpp"
#include "uwbnli/link_budget.hpp"
#include "uwbnli/optimizer.hpp"
#include "uwbnli/scenario_io.hpp"
#include "uwbnli/report_io.hpp"
#include "uwbnli/validation.hpp"
#include "uwbnli/tables.hpp"
