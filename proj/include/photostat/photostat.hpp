#pragma once

// Umbrella header.

#include "photostat/bayes.hpp"
#include "photostat/distribution.hpp"
#include "photostat/forward.hpp"
#include "photostat/inversion.hpp"
#include "photostat/json_io.hpp"
#include "photostat/maxent.hpp"
#include "photostat/montecarlo.hpp"
#include "photostat/rng.hpp"
#include "photostat/special.hpp"
#include "photostat/version.hpp"
