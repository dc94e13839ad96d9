#pragma once

#include "blockshrink/besov.hpp"
#include "blockshrink/design.hpp"
#include "blockshrink/estimator.hpp"
#include "blockshrink/grid.hpp"
#include "blockshrink/harness.hpp"
#include "blockshrink/parallel.hpp"
#include "blockshrink/rational.hpp"
#include "blockshrink/signals.hpp"
#include "blockshrink/summation.hpp"
#include "blockshrink/version.hpp"
#include "blockshrink/wavelet_basis.hpp"
