#pragma once

#include "fraccusum/cusum.hpp"
#include "fraccusum/drift.hpp"
#include "fraccusum/errors.hpp"
#include "fraccusum/fbm.hpp"
#include "fraccusum/grid.hpp"
#include "fraccusum/harness.hpp"
#include "fraccusum/likelihood.hpp"
#include "fraccusum/rng.hpp"
#include "fraccusum/transform.hpp"
#include "fraccusum/volatility.hpp"
