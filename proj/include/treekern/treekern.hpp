#pragma once

#include "treekern/checker.hpp"
#include "treekern/error.hpp"
#include "treekern/formula.hpp"
#include "treekern/graph.hpp"
#include "treekern/interpret.hpp"
#include "treekern/parser.hpp"
#include "treekern/prenex.hpp"
#include "treekern/reduce.hpp"
#include "treekern/structure.hpp"
#include "treekern/threshold.hpp"
#include "treekern/tree.hpp"
