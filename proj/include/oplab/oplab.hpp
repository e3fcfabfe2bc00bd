#pragma once

#include "oplab/errors.hpp"
#include "oplab/fourier_hat.hpp"
#include "oplab/modulus.hpp"
#include "oplab/parallel.hpp"
#include "oplab/report.hpp"
#include "oplab/sampling.hpp"
#include "oplab/scalar_fn.hpp"
#include "oplab/schur.hpp"
#include "oplab/spectral.hpp"
