#pragma once

#include "ropt/rng.hpp"
#include "ropt/core.hpp"
#include "ropt/manifolds.hpp"
#include "ropt/online.hpp"
#include "ropt/games.hpp"
#include "ropt/verify.hpp"
#include "ropt/bench.hpp"
