#pragma once

#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/system.hpp"
#include "sdstab/spectral_core.hpp"
#include "sdstab/assumptions.hpp"
#include "sdstab/transfer.hpp"
#include "sdstab/stability.hpp"
#include "sdstab/synthesis.hpp"
