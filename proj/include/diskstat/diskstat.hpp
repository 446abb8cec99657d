#pragma once

#include "diskstat/asymptotics.hpp"
#include "diskstat/common.hpp"
#include "diskstat/ensemble.hpp"
#include "diskstat/finite_difference.hpp"
#include "diskstat/quadrature.hpp"
#include "diskstat/rng.hpp"
#include "diskstat/sampler.hpp"
#include "diskstat/special_functions.hpp"
