#pragma once

#include "sparsemix/errors.hpp"
#include "sparsemix/rng.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/combinatorics.hpp"
#include "sparsemix/core.hpp"
#include "sparsemix/io.hpp"
#include "sparsemix/datagen.hpp"
#include "sparsemix/sparse_search.hpp"
#include "sparsemix/stats_spectral.hpp"
#include "sparsemix/stats_moment.hpp"
#include "sparsemix/statistics.hpp"
#include "sparsemix/calibration.hpp"
#include "sparsemix/selection.hpp"
#include "sparsemix/harness.hpp"
