#pragma once

#include "ggrnet/autodiff/graph.hpp"
#include "ggrnet/autodiff/ops.hpp"
#include "ggrnet/autodiff/optim.hpp"
#include "ggrnet/autodiff/tensor.hpp"
