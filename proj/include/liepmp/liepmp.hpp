#pragma once

#include "liepmp/error.hpp"
#include "liepmp/lie_core.hpp"
#include "liepmp/finite_diff.hpp"
#include "liepmp/implicit_step.hpp"
#include "liepmp/ocp_model.hpp"
#include "liepmp/pmp_core.hpp"
#include "liepmp/implicit_adjoint.hpp"
#include "liepmp/shooting.hpp"
#include "liepmp/oracle.hpp"
#include "liepmp/spacecraft.hpp"
