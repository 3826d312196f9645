#pragma once

#include "stoclot/certifier.hpp"
#include "stoclot/chance.hpp"
#include "stoclot/determinize.hpp"
#include "stoclot/error.hpp"
#include "stoclot/expected.hpp"
#include "stoclot/generators.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/io.hpp"
#include "stoclot/lottery.hpp"
#include "stoclot/lp_models.hpp"
#include "stoclot/random.hpp"
#include "stoclot/rounding.hpp"
#include "stoclot/simplex.hpp"
#include "stoclot/splitting.hpp"
#include "stoclot/verify.hpp"
