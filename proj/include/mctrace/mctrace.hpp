// Umbrella header.
#pragma once

#include "mctrace/centerline.hpp"
#include "mctrace/components.hpp"
#include "mctrace/core.hpp"
#include "mctrace/imageio.hpp"
#include "mctrace/metrics.hpp"
#include "mctrace/netspec.hpp"
#include "mctrace/patching.hpp"
#include "mctrace/phantom.hpp"
#include "mctrace/postprocess.hpp"
#include "mctrace/skeleton.hpp"
#include "mctrace/volume.hpp"
