#pragma once

#include "delaystab/expr.hpp"
#include "delaystab/model.hpp"
#include "delaystab/stability.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/decay.hpp"
#include "delaystab/config.hpp"
#include "delaystab/report.hpp"
