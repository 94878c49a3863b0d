#pragma once

// Umbrella header: the whole library in one include.

#include "zsmg/diagnostics.hpp"
#include "zsmg/game.hpp"
#include "zsmg/harness.hpp"
#include "zsmg/learner.hpp"
#include "zsmg/mat.hpp"
#include "zsmg/matrix_game.hpp"
#include "zsmg/oracle.hpp"
#include "zsmg/rng.hpp"
#include "zsmg/schedules.hpp"
#include "zsmg/validation.hpp"
