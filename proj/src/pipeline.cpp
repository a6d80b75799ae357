#include "corps/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace corps {

Topology load_topology_ref(const std::string& ref, const std::filesystem::path& base_dir) {
  if (is_preset_name(ref)) return load_preset(ref);
  std::filesystem::path file(ref);
  if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open topology file '" + file.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_topology(buf.str());
}

Topology resolve_topology(const Program& p, const std::optional<std::string>& override_ref,
                          const std::filesystem::path& base_dir) {
  if (override_ref) return load_topology_ref(*override_ref, {});
  if (p.topology_ref) return load_topology_ref(*p.topology_ref, base_dir);
  return load_preset("choreo");
}

ExprPtr assemble_main(const Program& p, const std::map<std::string, ExprPtr>& bindings) {
  ExprPtr e = p.main;
  for (auto it = p.defs.rbegin(); it != p.defs.rend(); ++it)
    e = substitute(e, it->name, mk::annot(it->body, it->type, it->span));
  for (const auto& in : p.inputs) {
    auto b = bindings.find(in.name);
    if (b != bindings.end()) e = substitute(e, in.name, mk::annot(b->second, in.type, b->second->span));
  }
  return e;
}

Compiled compile(const Program& p, const Topology& t, const std::map<std::string, ExprPtr>& bindings) {
  for (const auto& [name, value] : bindings) {
    bool declared = false;
    for (const auto& in : p.inputs) declared = declared || in.name == name;
    if (!declared) throw std::invalid_argument("'" + name + "' is not a declared input");
    if (!free_vars(value).empty())
      throw std::invalid_argument("value bound to '" + name + "' must be closed");
  }
  auto report = check_program(p, t);
  if (!report.ok()) throw report.errors.front();

  Compiled c;
  c.topology = t;
  c.type = p.main_type;
  for (const auto& in : p.inputs)
    if (!bindings.count(in.name)) c.context = c.context.with_binding(in.name, in.type, Path{});
  c.source = assemble_main(p, bindings);
  auto first = derive_check(t, c.context, c.source, p.main_type);
  c.main = elaborate(first);
  c.derivation = derive_check(t, c.context, c.main, p.main_type);
  return c;
}

}  // namespace corps
