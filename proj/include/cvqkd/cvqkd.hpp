#pragma once

#include "cvqkd/errors.hpp"
#include "cvqkd/symplectic.hpp"
#include "cvqkd/protocol.hpp"
#include "cvqkd/bounds.hpp"
#include "cvqkd/solvers.hpp"
#include "cvqkd/output.hpp"
