#pragma once

#include "graphcpd/detector.hpp"
#include "graphcpd/errors.hpp"
#include "graphcpd/experiments.hpp"
#include "graphcpd/family.hpp"
#include "graphcpd/filter.hpp"
#include "graphcpd/graph.hpp"
#include "graphcpd/io.hpp"
#include "graphcpd/random.hpp"
#include "graphcpd/spectral.hpp"
#include "graphcpd/stream.hpp"
#include "graphcpd/subspace.hpp"
#include "graphcpd/version.hpp"
