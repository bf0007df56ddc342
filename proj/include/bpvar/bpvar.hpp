#pragma once

// Umbrella header: the whole engine plus the VarDL language layer.

#include "bpvar/cepc.hpp"
#include "bpvar/cli.hpp"
#include "bpvar/corpus.hpp"
#include "bpvar/diff.hpp"
#include "bpvar/errors.hpp"
#include "bpvar/isomorphism.hpp"
#include "bpvar/model.hpp"
#include "bpvar/pesoa.hpp"
#include "bpvar/provop.hpp"
#include "bpvar/rules.hpp"
#include "bpvar/source_span.hpp"
#include "bpvar/traces.hpp"
#include "bpvar/transform.hpp"
#include "bpvar/vardl/ast.hpp"
#include "bpvar/vardl/dot.hpp"
#include "bpvar/vardl/export.hpp"
#include "bpvar/vardl/lexer.hpp"
#include "bpvar/vardl/parser.hpp"
#include "bpvar/vardl/serializer.hpp"
#include "bpvar/worklet.hpp"
