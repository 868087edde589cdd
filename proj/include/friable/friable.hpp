#pragma once

#include "friable/arith.hpp"
#include "friable/cli.hpp"
#include "friable/diophantine.hpp"
#include "friable/dispersion.hpp"
#include "friable/errors.hpp"
#include "friable/expsums.hpp"
#include "friable/smooth.hpp"
