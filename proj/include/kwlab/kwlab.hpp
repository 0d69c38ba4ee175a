#pragma once

#include "kwlab/blowup.hpp"
#include "kwlab/bubble.hpp"
#include "kwlab/calculus.hpp"
#include "kwlab/continuation.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/fft.hpp"
#include "kwlab/fixtures.hpp"
#include "kwlab/functional.hpp"
#include "kwlab/greens.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/io.hpp"
#include "kwlab/pipeline.hpp"
#include "kwlab/solver.hpp"
#include "kwlab/testfn.hpp"
#include "kwlab/thresholds.hpp"
#include "kwlab/util.hpp"
