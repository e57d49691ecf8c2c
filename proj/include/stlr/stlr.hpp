#pragma once

#include "stlr/cli.hpp"
#include "stlr/diffspace.hpp"
#include "stlr/dlr.hpp"
#include "stlr/error.hpp"
#include "stlr/eval.hpp"
#include "stlr/gmd.hpp"
#include "stlr/parser.hpp"
#include "stlr/prims.hpp"
#include "stlr/printer.hpp"
#include "stlr/sampler.hpp"
#include "stlr/sensitivity.hpp"
#include "stlr/syntax.hpp"
#include "stlr/typecheck.hpp"
