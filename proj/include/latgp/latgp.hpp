#pragma once

#include "latgp/analytic_model.hpp"
#include "latgp/baselines.hpp"
#include "latgp/dataset.hpp"
#include "latgp/error.hpp"
#include "latgp/evaluation.hpp"
#include "latgp/features.hpp"
#include "latgp/gp_regression.hpp"
#include "latgp/kernels.hpp"
#include "latgp/serialization.hpp"
