#pragma once

#include "baselines.hpp"
#include "core_types.hpp"
#include "data_io.hpp"
#include "dc_objective.hpp"
#include "dc_prox_newton.hpp"
#include "inner_solver.hpp"
#include "losses.hpp"
#include "metric_lbfgs.hpp"
#include "regularizers.hpp"
