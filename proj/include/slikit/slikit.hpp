#pragma once

#include "slikit/cloud.hpp"
#include "slikit/dataset.hpp"
#include "slikit/geometry.hpp"
#include "slikit/image.hpp"
#include "slikit/io.hpp"
#include "slikit/loop.hpp"
#include "slikit/metrics.hpp"
#include "slikit/odometry.hpp"
#include "slikit/pipeline.hpp"
#include "slikit/pmp.hpp"
#include "slikit/pose_graph.hpp"
#include "slikit/rig.hpp"
#include "slikit/rng.hpp"
#include "slikit/scene.hpp"
#include "slikit/sim.hpp"
#include "slikit/spatial.hpp"
#include "slikit/version.hpp"
