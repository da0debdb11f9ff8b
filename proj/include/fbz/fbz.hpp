#pragma once

#include "fbz/besov.hpp"
#include "fbz/common.hpp"
#include "fbz/covers.hpp"
#include "fbz/diagnostics.hpp"
#include "fbz/energy.hpp"
#include "fbz/extension.hpp"
#include "fbz/fractal.hpp"
#include "fbz/io.hpp"
#include "fbz/kernel.hpp"
#include "fbz/partition.hpp"
#include "fbz/pipeline.hpp"
#include "fbz/scale.hpp"
#include "fbz/space.hpp"
