#pragma once

#include "errors.hpp"
#include "special_functions.hpp"
#include "quadrature.hpp"
#include "process_model.hpp"
#include "density.hpp"
#include "entropy.hpp"
#include "rng.hpp"
#include "montecarlo.hpp"
#include "spec_json.hpp"
#include "report.hpp"
#include "experiments.hpp"
