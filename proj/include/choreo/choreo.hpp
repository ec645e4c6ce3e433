#pragma once

#include "choreo/action.hpp"
#include "choreo/bounds.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/io.hpp"
#include "choreo/loop.hpp"
#include "choreo/mountain_pass.hpp"
#include "choreo/optimize.hpp"
#include "choreo/random.hpp"
#include "choreo/spectral.hpp"
#include "choreo/verify.hpp"
