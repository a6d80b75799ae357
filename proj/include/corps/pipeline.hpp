#pragma once

// Turning a parsed Program into a closed, elaborated main term.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "corps/parser.hpp"
#include "corps/topology.hpp"
#include "corps/typecheck.hpp"

namespace corps {

/// `override_ref` (from `--topology`) wins over the program header; the
/// default is the `choreo` preset. Non-preset refs are file paths, resolved
/// against `base_dir` when relative.
Topology resolve_topology(const Program& p, const std::optional<std::string>& override_ref,
                          const std::filesystem::path& base_dir = {});

Topology load_topology_ref(const std::string& ref, const std::filesystem::path& base_dir = {});

/// Main with every def inlined as `(body : type)` and every bound input
/// replaced by `(value : declared type)`. Unbound inputs stay free.
ExprPtr assemble_main(const Program& p, const std::map<std::string, ExprPtr>& bindings = {});

struct Compiled {
  Topology topology;
  TypePtr type;
  ExprPtr source;      // assembled, before elaboration
  ExprPtr main;        // elaborated
  DerivPtr derivation; // derivation of `main`
  TypingContext context;  // the unbound inputs
};

/// Typechecks the program (throws the first TypeError), then assembles and
/// elaborates main.
Compiled compile(const Program& p, const Topology& t, const std::map<std::string, ExprPtr>& bindings = {});

}  // namespace corps
