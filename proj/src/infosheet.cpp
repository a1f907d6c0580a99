#include "leakaudit/infosheet.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "leakaudit/strings.hpp"

namespace leakaudit::infosheet {

QuestionId::QuestionId(int n) : n_(n) {
  if (n < kFirstQuestion || n > kLastQuestion) {
    throw InputError("unknown question id Q" + std::to_string(n) + " (valid: Q1..Q21)");
  }
}

QuestionId QuestionId::parse(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || (s[0] != 'Q' && s[0] != 'q')) throw InputError("malformed question id '" + std::string(s) + "'");
  int n = 0;
  for (char ch : s.substr(1)) {
    if (ch < '0' || ch > '9' || n > 1000) throw InputError("malformed question id '" + std::string(s) + "'");
    n = n * 10 + (ch - '0');
  }
  return QuestionId(n);
}

QuestionInfo question_info(QuestionId q) {
  switch (q.number()) {
    case 9: return {"how the train and test sets are split", TaxonomyCode::L1_1};
    case 10: return {"duplicates in the data and how they are handled", TaxonomyCode::L1_4};
    case 11: return {"dependencies between train and test rows", TaxonomyCode::L3_2};
    case 12:
    case 13: return {"train/test separation during preprocessing", TaxonomyCode::L1_2};
    case 14:
    case 15: return {"train/test separation during feature selection", TaxonomyCode::L1_3};
    case 16:
    case 17: return {"train/test separation during model evaluation", TaxonomyCode::L1_1};
    case 18:
    case 19: return {"selection of rows and match to the claimed distribution", TaxonomyCode::L3_3};
    case 20: return {"temporal ordering of train and test data", TaxonomyCode::L3_1};
    case 21: return {"legitimacy of every feature", TaxonomyCode::L2};
    default: return {"study metadata", std::nullopt};
  }
}

std::string_view to_string(AnswerStatus s) {
  switch (s) {
    case AnswerStatus::answered: return "answered";
    case AnswerStatus::not_applicable: return "not_applicable";
    case AnswerStatus::missing: return "missing";
  }
  return "?";
}

std::vector<QuestionId> StructuredClaims::claimed_questions() const {
  std::set<QuestionId> qs;
  for (const auto* c : {&split_is_temporal, &no_cross_split_duplicates, &groups_disjoint,
                        &test_matches_claim_distribution}) {
    if (*c) qs.insert((*c)->source);
  }
  for (const auto& [k, v] : preprocessing_fit_scope) qs.insert(v.source);
  for (const auto& [k, v] : feature_justifications) qs.insert(v.source);
  return {qs.begin(), qs.end()};
}

std::string InfoSheet::distribution_description() const {
  if (!declarations.test_matches_claim_distribution) return {};
  return answer(declarations.test_matches_claim_distribution->source).text;
}

const std::array<Section, 3>& sections() {
  static const std::array<Section, 3> s{{
      {"L1", "clean train-test separation", 9, 17, TaxonomyCode::L1_1},
      {"L2", "each feature in the model is legitimate", 21, 21, TaxonomyCode::L2},
      {"L3", "test set is drawn from the distribution of scientific interest", 18, 20, TaxonomyCode::L3_3},
  }};
  return s;
}

namespace {

bool parse_bool_value(std::string_view v, const std::string& where) {
  const auto s = to_lower(trim(v));
  if (s == "true") return true;
  if (s == "false") return false;
  throw InputError(where + ": expected true or false, got '" + std::string(trim(v)) + "'");
}

void require_question(QuestionId q, std::initializer_list<int> allowed, std::string_view claim, const std::string& where) {
  if (std::find(allowed.begin(), allowed.end(), q.number()) == allowed.end()) {
    std::string list;
    for (int a : allowed) list += (list.empty() ? "Q" : ", Q") + std::to_string(a);
    throw InputError(where + ": claim '" + std::string(claim) + "' belongs under " + list);
  }
}

template <typename T>
void set_claim(std::optional<Claim<T>>& slot, T value, QuestionId q, std::string_view name, const std::string& where) {
  if (slot) throw InputError(where + ": duplicate claim '" + std::string(name) + "'");
  slot = Claim<T>{std::move(value), q};
}

void parse_claim(std::string_view body, QuestionId q, StructuredClaims& c, const std::string& where) {
  const auto eq = body.find('=');
  if (eq == std::string_view::npos) throw InputError(where + ": claim must have the form 'key = value'");
  const auto lhs = trim(body.substr(0, eq));
  const auto rhs = trim(body.substr(eq + 1));
  const auto space = lhs.find(' ');
  const auto key = lhs.substr(0, space);
  const auto arg = space == std::string_view::npos ? std::string_view{} : trim(lhs.substr(space + 1));

  auto no_arg = [&] {
    if (!arg.empty()) throw InputError(where + ": claim '" + std::string(key) + "' takes no argument");
  };
  if (key == "split_is_temporal") {
    no_arg();
    require_question(q, {20}, key, where);
    set_claim(c.split_is_temporal, parse_bool_value(rhs, where), q, key, where);
  } else if (key == "no_cross_split_duplicates") {
    no_arg();
    require_question(q, {10}, key, where);
    set_claim(c.no_cross_split_duplicates, parse_bool_value(rhs, where), q, key, where);
  } else if (key == "groups_disjoint") {
    no_arg();
    require_question(q, {11}, key, where);
    set_claim(c.groups_disjoint, parse_bool_value(rhs, where), q, key, where);
  } else if (key == "test_matches_claim_distribution") {
    no_arg();
    require_question(q, {18, 19}, key, where);
    set_claim(c.test_matches_claim_distribution, parse_bool_value(rhs, where), q, key, where);
  } else if (key == "fit_scope") {
    require_question(q, {12, 13, 14, 15}, key, where);
    if (arg.empty()) throw InputError(where + ": fit_scope claim needs a step name");
    const auto scope = parse_fit_scope(rhs);
    if (!c.preprocessing_fit_scope.emplace(std::string(arg), Claim<FitScope>{scope, q}).second) {
      throw InputError(where + ": duplicate fit_scope claim for step '" + std::string(arg) + "'");
    }
  } else if (key == "feature") {
    require_question(q, {21}, key, where);
    if (arg.empty()) throw InputError(where + ": feature claim needs a column pattern");
    if (rhs.empty()) throw InputError(where + ": feature claim needs a justification");
    if (!c.feature_justifications.emplace(std::string(arg), Claim<std::string>{std::string(rhs), q}).second) {
      throw InputError(where + ": duplicate justification for pattern '" + std::string(arg) + "'");
    }
  } else {
    throw InputError(where + ": unknown claim '" + std::string(key) + "'");
  }
}

std::string rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<QuestionId> block_header(std::string_view line) {
  line = trim(line);
  if (line.size() < 4 || line.front() != '[' || line.back() != ']') return std::nullopt;
  const auto inner = line.substr(1, line.size() - 2);
  if (inner.empty() || (inner[0] != 'Q' && inner[0] != 'q')) return std::nullopt;
  return QuestionId::parse(inner);
}

}  // namespace

InfoSheet parse_info_sheet(std::string_view doc) {
  InfoSheet sheet;
  for (int q = kFirstQuestion; q <= kLastQuestion; ++q) sheet.answers.emplace(QuestionId(q), Answer{});

  std::optional<QuestionId> current;
  std::vector<std::string> text;
  std::set<QuestionId> seen;
  std::set<std::string> header_keys;

  auto close_block = [&] {
    if (!current) return;
    while (!text.empty() && text.back().empty()) text.pop_back();
    auto first = std::find_if(text.begin(), text.end(), [](const std::string& l) { return !l.empty(); });
    std::string joined;
    for (auto it = first; it != text.end(); ++it) {
      if (!joined.empty() || it != first) joined += '\n';
      joined += *it;
    }
    auto& a = sheet.answers.at(*current);
    const auto claimed = sheet.declarations.claimed_questions();
    const bool has_claim = std::find(claimed.begin(), claimed.end(), *current) != claimed.end();
    const auto lowered = to_lower(trim(joined));
    if (lowered == "n/a" || lowered == "not applicable") {
      if (has_claim) throw InputError(current->str() + ": a not-applicable answer cannot carry claims");
      a = {"N/A", AnswerStatus::not_applicable};
    } else if (!joined.empty()) {
      a = {joined, AnswerStatus::answered};
    } else if (has_claim) {
      throw InputError(current->str() + ": structured claim without a justification");
    }
    text.clear();
  };

  std::size_t lineno = 0;
  for (const auto& raw : split(doc, '\n')) {
    ++lineno;
    const std::string where = "sheet line " + std::to_string(lineno);
    const std::string line = rtrim(raw);
    std::optional<QuestionId> header;
    try {
      header = block_header(line);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    if (header) {
      close_block();
      if (!seen.insert(*header).second) throw InputError(where + ": duplicate question " + header->str());
      current = header;
      continue;
    }
    if (!current) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto colon = t.find(':');
      if (colon == std::string_view::npos) throw InputError(where + ": malformed header line");
      const std::string key(trim(t.substr(0, colon)));
      const std::string value(trim(t.substr(colon + 1)));
      if (key == "role") {
        const auto eq = value.find('=');
        if (eq == std::string::npos) throw InputError(where + ": role must read 'role: <column> = <role>'");
        const std::string col(trim(std::string_view(value).substr(0, eq)));
        if (col.empty()) throw InputError(where + ": role needs a column name");
        sheet.declared_roles.emplace_back(col, parse_role(trim(std::string_view(value).substr(eq + 1))));
        continue;
      }
      if (!header_keys.insert(key).second) throw InputError(where + ": repeated header field '" + key + "'");
      if (key == "sheet_version") sheet.sheet_version = value;
      else if (key == "study_title") sheet.study_title = value;
      else if (key == "claim_summary") sheet.claim_summary = value;
      else throw InputError(where + ": unknown header field '" + key + "'");
      continue;
    }
    const auto t = trim(line);
    if (t.rfind("claim:", 0) == 0) {
      parse_claim(trim(t.substr(6)), *current, sheet.declarations, where);
      continue;
    }
    text.push_back(line);
  }
  close_block();
  if (sheet.sheet_version.empty()) throw InputError("info sheet has no sheet_version");
  return sheet;
}

InfoSheet load_info_sheet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read info sheet '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_info_sheet(buf.str());
}

std::string serialize_info_sheet(const InfoSheet& sheet) {
  std::ostringstream os;
  os << "sheet_version: " << sheet.sheet_version << '\n';
  if (!sheet.study_title.empty()) os << "study_title: " << sheet.study_title << '\n';
  if (!sheet.claim_summary.empty()) os << "claim_summary: " << sheet.claim_summary << '\n';
  for (const auto& [col, role] : sheet.declared_roles) os << "role: " << col << " = " << to_string(role) << '\n';

  const auto& c = sheet.declarations;
  auto bool_claim = [&](const std::optional<Claim<bool>>& cl, std::string_view name, QuestionId q) {
    if (cl && cl->source == q) os << "claim: " << name << " = " << (cl->value ? "true" : "false") << '\n';
  };
  for (const auto& [q, a] : sheet.answers) {
    if (a.status == AnswerStatus::missing) continue;
    os << "\n[" << q.str() << "]\n";
    bool_claim(c.no_cross_split_duplicates, "no_cross_split_duplicates", q);
    bool_claim(c.groups_disjoint, "groups_disjoint", q);
    for (const auto& [step, cl] : c.preprocessing_fit_scope) {
      if (cl.source == q) os << "claim: fit_scope " << step << " = " << to_string(cl.value) << '\n';
    }
    bool_claim(c.test_matches_claim_distribution, "test_matches_claim_distribution", q);
    bool_claim(c.split_is_temporal, "split_is_temporal", q);
    for (const auto& [pat, cl] : c.feature_justifications) {
      if (cl.source == q) os << "claim: feature " << pat << " = " << cl.value << '\n';
    }
    os << a.text << '\n';
  }
  return os.str();
}

std::vector<Finding> validate_completeness(const InfoSheet& sheet) {
  std::vector<Finding> out;
  for (const auto& sec : sections()) {
    json missing = json::array();
    json concerns = json::array();
    std::set<std::string_view> topics;
    std::string topic_list;
    for (int n = sec.first; n <= sec.last; ++n) {
      const QuestionId q(n);
      if (sheet.answer(q).status != AnswerStatus::missing) continue;
      const auto info = question_info(q);
      missing.push_back(q.str());
      concerns.push_back({{"question", q.str()}, {"topic", info.topic}, {"code", to_string(*info.guards)}});
      if (topics.insert(info.topic).second) topic_list += (topic_list.empty() ? "" : "; ") + std::string(info.topic);
    }
    if (missing.empty()) continue;
    std::string ids;
    for (const auto& m : missing) ids += (ids.empty() ? "" : ", ") + m.get<std::string>();
    out.push_back(Finding{sec.code, Severity::error,
                          "argument " + std::string(sec.name) + " (" + std::string(sec.argument) +
                              ") is incomplete: missing " + ids + " [" + topic_list + "]",
                          {{"section", sec.name}, {"argument", sec.argument}, {"missing", missing}, {"concerns", concerns}},
                          "infosheet.completeness." + std::string(sec.name)});
  }

  // Reported whether or not Q21 has been written yet; N/A silences it.
  const QuestionId q21(21);
  if (sheet.answer(q21).status != AnswerStatus::not_applicable) {
    json uncovered = json::array();
    for (const auto& [col, role] : sheet.declared_roles) {
      if (role != RoleKind::feature) continue;
      const bool covered = std::any_of(sheet.declarations.feature_justifications.begin(),
                                       sheet.declarations.feature_justifications.end(),
                                       [&](const auto& kv) { return glob_match(kv.first, col); });
      if (!covered) uncovered.push_back(col);
    }
    if (!uncovered.empty()) {
      out.push_back(Finding{TaxonomyCode::L2, Severity::warning,
                            "Q21 justifications do not cover every declared feature",
                            {{"question", "Q21"}, {"uncovered_features", uncovered}},
                            "infosheet.feature_coverage"});
    }
  }
  std::stable_sort(out.begin(), out.end(), finding_less);
  return out;
}

Dataset apply_declared_roles(const InfoSheet& sheet, const Dataset& ds, const std::map<std::string, RoleKind>& explicit_roles) {
  Dataset out = ds;
  for (const auto& [col, role] : sheet.declared_roles) {
    if (!ds.find(col)) throw InputError("info sheet declares a role for column '" + col + "', which the data lacks");
    if (auto it = explicit_roles.find(col); it != explicit_roles.end()) {
      if (it->second != role) {
        throw InputError("conflicting roles for column '" + col + "': sheet says " + std::string(to_string(role)) +
                         ", command line says " + std::string(to_string(it->second)));
      }
      continue;
    }
    out = out.with_role(col, role);
  }
  return out;
}

CrosscheckResult crosscheck(const InfoSheet& sheet, const CrosscheckInputs& in, const CheckConfig& config) {
  const auto& ds = in.dataset;
  for (const auto& [col, role] : sheet.declared_roles) {
    if (!ds.find(col)) throw InputError("info sheet references column '" + col + "', which the data lacks");
  }
  const auto& c = sheet.declarations;
  CrosscheckResult res;
  std::set<QuestionId> unverifiable;

  auto record = [&](QuestionId q, const std::vector<Finding>& findings, TaxonomyCode code, bool warnings_count) {
    for (const auto& f : findings) {
      if (f.code != code) continue;
      if (f.severity == Severity::error || (warnings_count && f.severity == Severity::warning)) {
        res.contradictions.push_back({q, code, f});
      }
    }
  };
  auto run = [&](auto&& detector) -> std::optional<std::vector<Finding>> {
    try {
      return detector();
    } catch (const CheckSkipped&) {
      return std::nullopt;
    }
  };

  if (c.no_cross_split_duplicates && c.no_cross_split_duplicates->value) {
    const auto f = check_duplicates(ds, in.split, config);
    record(c.no_cross_split_duplicates->source, f, TaxonomyCode::L1_4, false);
  }
  if (c.groups_disjoint && c.groups_disjoint->value) {
    if (auto f = run([&] { return check_group_overlap(ds, in.split); })) {
      record(c.groups_disjoint->source, *f, TaxonomyCode::L3_2, false);
    } else {
      unverifiable.insert(c.groups_disjoint->source);
    }
  }
  for (const auto& [step_name, claim] : c.preprocessing_fit_scope) {
    const PipelineStep* step = in.manifest ? in.manifest->find(step_name) : nullptr;
    if (!step) {
      unverifiable.insert(claim.source);
      continue;
    }
    if (claim.value == FitScope::all_data) continue;
    const auto f = check_manifest(PipelineManifest{{*step}});
    for (const auto& finding : f) res.contradictions.push_back({claim.source, finding.code, finding});
  }
  if (c.test_matches_claim_distribution && c.test_matches_claim_distribution->value) {
    if (in.reference) {
      const auto [train, test] = partition(ds, in.split);
      const auto f = check_sampling_bias(test, *in.reference, config);
      record(c.test_matches_claim_distribution->source, f, TaxonomyCode::L3_3, true);
    } else {
      unverifiable.insert(c.test_matches_claim_distribution->source);
    }
  }
  if (c.split_is_temporal && c.split_is_temporal->value) {
    if (auto f = run([&] { return check_temporal(ds, in.split); })) {
      record(c.split_is_temporal->source, *f, TaxonomyCode::L3_1, false);
    } else {
      unverifiable.insert(c.split_is_temporal->source);
    }
  }

  // Prose is never judged: answered leakage questions without a structured
  // claim cannot be verified against the data.
  const auto claimed = c.claimed_questions();
  for (int n = 9; n <= kLastQuestion; ++n) {
    const QuestionId q(n);
    if (q.number() == 21) continue;  // Q21 is judged by completeness coverage, not data
    if (sheet.answer(q).status != AnswerStatus::answered) continue;
    if (std::find(claimed.begin(), claimed.end(), q) == claimed.end()) unverifiable.insert(q);
  }
  res.unverifiable.assign(unverifiable.begin(), unverifiable.end());
  std::stable_sort(res.contradictions.begin(), res.contradictions.end(), [](const auto& a, const auto& b) {
    if (a.question != b.question) return a.question < b.question;
    return finding_less(a.finding, b.finding);
  });
  res.consistent = res.contradictions.empty();
  return res;
}

json to_json(const CrosscheckResult& r) {
  json contradictions = json::array();
  for (const auto& c : r.contradictions) {
    contradictions.push_back({{"question", c.question.str()}, {"code", to_string(c.code)}, {"finding", c.finding}});
  }
  json unverifiable = json::array();
  for (const auto& q : r.unverifiable) unverifiable.push_back(q.str());
  return json{{"consistent", r.consistent}, {"contradictions", contradictions}, {"unverifiable", unverifiable}};
}

json sheet_summary_json(const InfoSheet& sheet) {
  json answers = json::object();
  for (const auto& [q, a] : sheet.answers) answers[q.str()] = to_string(a.status);
  json claimed = json::array();
  for (const auto& q : sheet.declarations.claimed_questions()) claimed.push_back(q.str());
  return json{{"sheet_version", sheet.sheet_version},
              {"study_title", sheet.study_title},
              {"answers", answers},
              {"claimed_questions", claimed}};
}

}  // namespace leakaudit::infosheet
