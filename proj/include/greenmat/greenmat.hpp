#pragma once

#include "greenmat/attention.hpp"
#include "greenmat/composer.hpp"
#include "greenmat/detail.hpp"
#include "greenmat/diffusion.hpp"
#include "greenmat/grad_check.hpp"
#include "greenmat/greenpost.hpp"
#include "greenmat/grid.hpp"
#include "greenmat/kmeans.hpp"
#include "greenmat/matting_head.hpp"
#include "greenmat/metrics.hpp"
#include "greenmat/png_io.hpp"
#include "greenmat/resample.hpp"
#include "greenmat/rng.hpp"
#include "greenmat/tensor_io.hpp"
#include "greenmat/run_config.hpp"
#include "greenmat/verify.hpp"
#include "greenmat/commands.hpp"
