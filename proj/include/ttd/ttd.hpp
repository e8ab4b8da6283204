#pragma once

#include "error.hpp"
#include "dense_tensor.hpp"
#include "linalg.hpp"
#include "tt_tensor.hpp"
#include "tt_decomp.hpp"
#include "amcu.hpp"
#include "amcu_tt.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "apps/signals.hpp"
#include "apps/metrics.hpp"
#include "apps/noise.hpp"
#include "apps/image.hpp"
#include "apps/bss.hpp"
