// Convenience header for the core library. Experiment orchestration
// (fairrec/experiment.hpp) is separate because it needs nlohmann_json.
#pragma once

#include "fairrec/closed_forms.hpp"
#include "fairrec/core_model.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/fair_optimizer.hpp"
#include "fairrec/lp_engine.hpp"
#include "fairrec/nash_solver.hpp"
#include "fairrec/population_gen.hpp"
