#pragma once

#include "crround/analysis.hpp"
#include "crround/balancedness.hpp"
#include "crround/core.hpp"
#include "crround/montecarlo.hpp"
#include "crround/random.hpp"
#include "crround/scheme.hpp"
