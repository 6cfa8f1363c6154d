#pragma once

// Umbrella header: semiclassical Gaussian wave packet propagation via the
// characteristic system, variational-matrix invariants, the phase-space
// frame propagator, Van Vleck kernels, and the split-step reference solver.

#include "agwp/config.hpp"
#include "agwp/errors.hpp"
#include "agwp/fft.hpp"
#include "agwp/flow.hpp"
#include "agwp/grid.hpp"
#include "agwp/invariants.hpp"
#include "agwp/io.hpp"
#include "agwp/model.hpp"
#include "agwp/ode.hpp"
#include "agwp/packet.hpp"
#include "agwp/parallel.hpp"
#include "agwp/propagator.hpp"
#include "agwp/reference.hpp"
#include "agwp/scenarios.hpp"
#include "agwp/types.hpp"
#include "agwp/vanvleck.hpp"
#include "agwp/version.hpp"
