#include "leakaudit/manifest.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "leakaudit/dataset.hpp"
#include "leakaudit/strings.hpp"

namespace leakaudit {

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::imputation: return "imputation";
    case StepKind::scaling: return "scaling";
    case StepKind::resampling: return "resampling";
    case StepKind::feature_selection: return "feature_selection";
    case StepKind::encoding: return "encoding";
    case StepKind::other: return "other";
  }
  return "?";
}

std::string_view to_string(FitScope s) {
  switch (s) {
    case FitScope::train_only: return "train_only";
    case FitScope::all_data: return "all_data";
    case FitScope::per_fold: return "per_fold";
  }
  return "?";
}

StepKind parse_step_kind(std::string_view s) {
  for (auto k : {StepKind::imputation, StepKind::scaling, StepKind::resampling, StepKind::feature_selection,
                 StepKind::encoding, StepKind::other}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown step kind '" + std::string(s) + "'");
}

FitScope parse_fit_scope(std::string_view s) {
  for (auto f : {FitScope::train_only, FitScope::all_data, FitScope::per_fold}) {
    if (to_string(f) == s) return f;
  }
  throw InputError("unknown fit_scope '" + std::string(s) + "'");
}

const PipelineStep* PipelineManifest::find(std::string_view name) const {
  for (const auto& s : steps) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

namespace {

struct PendingStep {
  std::size_t line = 0;
  std::optional<std::string> name, kind, fit_scope;
  std::optional<bool> learned;
};

PipelineStep finish(const PendingStep& p) {
  const std::string where = "manifest step starting at line " + std::to_string(p.line);
  if (!p.name || p.name->empty()) throw InputError(where + ": missing name");
  if (!p.kind) throw InputError(where + ": missing kind");
  if (!p.fit_scope) throw InputError(where + ": missing fit_scope");
  PipelineStep s;
  s.name = *p.name;
  s.kind = parse_step_kind(*p.kind);
  s.fit_scope = parse_fit_scope(*p.fit_scope);
  s.learned = p.learned.value_or(true);
  if (s.kind == StepKind::resampling && !s.learned) {
    throw InputError(where + ": resampling steps are learned by definition");
  }
  return s;
}

}  // namespace

PipelineManifest parse_manifest(std::string_view text) {
  PipelineManifest m;
  std::optional<PendingStep> cur;
  std::set<std::string> names;
  auto flush = [&] {
    if (!cur) return;
    auto step = finish(*cur);
    if (!names.insert(step.name).second) throw InputError("duplicate manifest step name '" + step.name + "'");
    m.steps.push_back(std::move(step));
    cur.reset();
  };
  std::size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[step]") {
      flush();
      cur = PendingStep{lineno, {}, {}, {}, {}};
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("manifest line " + std::to_string(lineno) + ": expected 'key = value' or '[step]'");
    }
    if (!cur) throw InputError("manifest line " + std::to_string(lineno) + ": field outside a [step] block");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    auto set_once = [&](auto& slot, auto v) {
      if (slot) throw InputError("manifest line " + std::to_string(lineno) + ": repeated field '" + key + "'");
      slot = std::move(v);
    };
    if (key == "name") set_once(cur->name, value);
    else if (key == "kind") set_once(cur->kind, value);
    else if (key == "fit_scope") set_once(cur->fit_scope, value);
    else if (key == "learned") {
      const auto v = to_lower(value);
      if (v != "true" && v != "false") {
        throw InputError("manifest line " + std::to_string(lineno) + ": learned must be true or false");
      }
      set_once(cur->learned, v == "true");
    } else {
      throw InputError("manifest line " + std::to_string(lineno) + ": unknown field '" + key + "'");
    }
  }
  flush();
  return m;
}

PipelineManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

std::string serialize_manifest(const PipelineManifest& m) {
  std::ostringstream os;
  for (const auto& s : m.steps) {
    os << "[step]\nname = " << s.name << "\nkind = " << to_string(s.kind)
       << "\nlearned = " << (s.learned ? "true" : "false") << "\nfit_scope = " << to_string(s.fit_scope)
       << "\n\n";
  }
  return os.str();
}

}  // namespace leakaudit
