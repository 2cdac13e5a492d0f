#pragma once

#include "klnmf/equivalence.hpp"
#include "klnmf/error.hpp"
#include "klnmf/expectations.hpp"
#include "klnmf/init.hpp"
#include "klnmf/mu_solvers.hpp"
#include "klnmf/objectives.hpp"
#include "klnmf/reconstruct.hpp"
#include "klnmf/reference.hpp"
#include "klnmf/specfun.hpp"
#include "klnmf/types.hpp"
#include "klnmf/vi_solvers.hpp"
