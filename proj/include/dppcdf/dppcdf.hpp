#ifndef DPPCDF_DPPCDF_HPP
#define DPPCDF_DPPCDF_HPP

#include "dppcdf/bromwich.hpp"
#include "dppcdf/cdf.hpp"
#include "dppcdf/error.hpp"
#include "dppcdf/io.hpp"
#include "dppcdf/kernel.hpp"
#include "dppcdf/laplace.hpp"
#include "dppcdf/linalg.hpp"
#include "dppcdf/lowrank.hpp"
#include "dppcdf/parallel.hpp"
#include "dppcdf/samplers.hpp"
#include "dppcdf/synthetic.hpp"

#endif // DPPCDF_DPPCDF_HPP
