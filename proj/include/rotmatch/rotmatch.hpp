#pragma once

#include "rotmatch/analysis.hpp"
#include "rotmatch/costs.hpp"
#include "rotmatch/denoising.hpp"
#include "rotmatch/errors.hpp"
#include "rotmatch/geometry.hpp"
#include "rotmatch/io.hpp"
#include "rotmatch/matching.hpp"
