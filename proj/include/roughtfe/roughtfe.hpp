#pragma once

#include "roughtfe/errors.hpp"
#include "roughtfe/fit.hpp"
#include "roughtfe/frac_kernel.hpp"
#include "roughtfe/linalg.hpp"
#include "roughtfe/model.hpp"
#include "roughtfe/nelder_mead.hpp"
#include "roughtfe/noise.hpp"
#include "roughtfe/paths.hpp"
#include "roughtfe/tfe.hpp"
#include "roughtfe/volterra_det.hpp"
#include "roughtfe/volterra_sde.hpp"
