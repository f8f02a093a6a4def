#pragma once

#include "rodband/errors.hpp"
#include "rodband/config.hpp"
#include "rodband/specfun.hpp"
#include "rodband/lattice_sums.hpp"
#include "rodband/electrostatics.hpp"
#include "rodband/dirichlet.hpp"
#include "rodband/effective_media.hpp"
#include "rodband/dispersion.hpp"
#include "rodband/bloch_pwe.hpp"
#include "rodband/parallel.hpp"
#include "rodband/csv.hpp"
#include "rodband/pipeline.hpp"
