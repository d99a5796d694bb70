#pragma once

#include "swagan/nn/discriminator.hpp"
#include "swagan/nn/flops.hpp"
#include "swagan/nn/generator.hpp"
#include "swagan/nn/layers.hpp"
#include "swagan/nn/spec.hpp"
