#pragma once

#include "stokeslab/errors.hpp"
#include "stokeslab/scalar.hpp"
#include "stokeslab/series.hpp"
#include "stokeslab/mpoly.hpp"
#include "stokeslab/linalg.hpp"
#include "stokeslab/roots.hpp"
#include "stokeslab/fitting.hpp"
#include "stokeslab/quadrature.hpp"
#include "stokeslab/parallel.hpp"
#include "stokeslab/odesys.hpp"
#include "stokeslab/io.hpp"
#include "stokeslab/resum.hpp"
#include "stokeslab/stokes.hpp"
#include "stokeslab/dynamics.hpp"
#include "stokeslab/probes.hpp"
#include "stokeslab/casestudies.hpp"
