#pragma once

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/spectral.hpp"
#include "tikreg/rules_delta.hpp"
#include "tikreg/rules_heuristic.hpp"
#include "tikreg/local_minimizers.hpp"
#include "tikreg/selection.hpp"
#include "tikreg/testproblems.hpp"
#include "tikreg/analysis.hpp"
#include "tikreg/problem_io.hpp"
#include "tikreg/harness.hpp"
