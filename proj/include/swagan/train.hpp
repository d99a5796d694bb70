#pragma once

#include "swagan/train/bench.hpp"
#include "swagan/train/config.hpp"
#include "swagan/train/gan.hpp"
#include "swagan/train/losses.hpp"
#include "swagan/train/overfit.hpp"
#include "swagan/train/project.hpp"
