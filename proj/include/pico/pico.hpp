#pragma once

// PiCo: a pipeline composition language with unified bag/list/stream
// semantics. Parse programs, type-check them, lower them to dataflow graphs
// and run those graphs on semantic collections.

#include "pico/ast.hpp"
#include "pico/collection.hpp"
#include "pico/dataflow.hpp"
#include "pico/errors.hpp"
#include "pico/executor.hpp"
#include "pico/kernel.hpp"
#include "pico/parser.hpp"
#include "pico/typecheck.hpp"
#include "pico/value.hpp"
