#include "etsync/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "etsync/errors.hpp"
#include "etsync/models.hpp"

namespace etsync {

namespace config {

const Table* Document::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Document parse() {
    Document doc;
    Table* current = &doc.root;
    std::set<std::string> seen_sections;
    for (;;) {
      skip_blank_and_comments();
      if (eof()) break;
      if (peek() == '[') {
        const std::size_t line = line_;
        ++pos_;
        std::string name = read_while([](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
        if (name.empty() || eof() || peek() != ']') fail("malformed section header");
        ++pos_;
        expect_line_end();
        if (!seen_sections.insert(name).second) fail("duplicate section [" + name + "]", line);
        doc.sections.push_back(Table{name, line, {}});
        current = &doc.sections.back();
        continue;
      }
      const std::size_t line = line_;
      std::string key = read_while([](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
      if (key.empty()) fail("expected a key");
      skip_spaces();
      if (eof() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos_;
      skip_spaces();
      Value v = parse_value();
      expect_line_end();
      if (!current->entries.emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'", line);
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t line = 0) const {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line ? line : line_) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  template <class Pred>
  std::string read_while(Pred pred) {
    const std::size_t start = pos_;
    while (!eof() && pred(peek())) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_and_comments() {
    for (;;) {
      skip_spaces();
      skip_comment();
      if (!eof() && peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      break;
    }
  }

  void expect_line_end() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  Value parse_value() {
    if (eof()) fail("missing value");
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '[') {
      ++pos_;
      std::vector<Value> items;
      for (;;) {
        skip_blank_and_comments();
        if (eof()) fail("unterminated array", v.line);
        if (peek() == ']') {
          ++pos_;
          break;
        }
        items.push_back(parse_value());
        skip_blank_and_comments();
        if (eof()) fail("unterminated array", v.line);
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      v.data = std::move(items);
    } else if (c == '"') {
      ++pos_;
      std::string str;
      while (!eof() && peek() != '"' && peek() != '\n') str.push_back(s_[pos_++]);
      if (eof() || peek() != '"') fail("unterminated string");
      ++pos_;
      v.data = std::move(str);
    } else if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      v.data = true;
    } else if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      v.data = false;
    } else {
      std::string tok = read_while([](char ch) {
        return std::isdigit(static_cast<unsigned char>(ch)) || ch == '+' || ch == '-' || ch == '.' || ch == 'e' ||
               ch == 'E';
      });
      if (tok.empty()) fail("unrecognized value");
      const char* begin = tok.c_str() + (tok[0] == '+' ? 1 : 0);
      double d = 0.0;
      const auto res = std::from_chars(begin, tok.c_str() + tok.size(), d);
      if (res.ec != std::errc() || res.ptr != tok.c_str() + tok.size()) fail("invalid number '" + tok + "'");
      v.data = d;
    }
    return v;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

Document parse_document(const std::string& text) { return Parser(text).parse(); }

}  // namespace config

namespace {

using config::Table;
using config::Value;

[[noreturn]] void parse_fail(const Table& t, const std::string& key, std::size_t line, const std::string& what) {
  const std::string where = t.name.empty() ? key : "[" + t.name + "]." + key;
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + where + ": " + what);
}

[[noreturn]] void validation_fail(const Table& t, const std::string& key, const std::string& what) {
  const std::string where = t.name.empty() ? key : "[" + t.name + "]." + key;
  throw Error(ErrorKind::ValidationError, where + ": " + what);
}

class Reader {
 public:
  explicit Reader(const Table& t) : t_(t) {}

  bool has(const std::string& key) const { return t_.entries.count(key) != 0; }

  const Value& get(const std::string& key) {
    const auto it = t_.entries.find(key);
    if (it == t_.entries.end()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(t_.line) + ": " + where() + ": missing key '" + key + "'");
    }
    used_.insert(key);
    return it->second;
  }

  double number(const std::string& key) {
    const Value& v = get(key);
    if (!v.is_number()) parse_fail(t_, key, v.line, "expected a number");
    return std::get<double>(v.data);
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Value& v = get(key);
    if (!v.is_bool()) parse_fail(t_, key, v.line, "expected true or false");
    return std::get<bool>(v.data);
  }

  std::string string(const std::string& key) {
    const Value& v = get(key);
    if (!v.is_string()) parse_fail(t_, key, v.line, "expected a string");
    return std::get<std::string>(v.data);
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  bool is_string(const std::string& key) const { return has(key) && t_.entries.at(key).is_string(); }

  std::vector<double> vector(const std::string& key) {
    const Value& v = get(key);
    return to_vector(v, key);
  }

  Matrix matrix(const std::string& key) {
    const Value& v = get(key);
    if (!v.is_array()) parse_fail(t_, key, v.line, "expected a matrix as a list of rows");
    const auto& rows = std::get<std::vector<Value>>(v.data);
    if (rows.empty()) parse_fail(t_, key, v.line, "matrix must have at least one row");
    std::vector<std::vector<double>> data;
    for (const auto& r : rows) data.push_back(to_vector(r, key));
    const std::size_t cols = data.front().size();
    if (cols == 0) parse_fail(t_, key, v.line, "matrix rows must be nonempty");
    Matrix m(data.size(), cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].size() != cols) parse_fail(t_, key, v.line, "ragged matrix rows");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = data[i][j];
    }
    return m;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : t_.entries)
      if (!used_.count(key)) parse_fail(t_, key, value.line, "unknown key");
  }

  const Table& table() const { return t_; }

 private:
  std::string where() const { return t_.name.empty() ? "top level" : "[" + t_.name + "]"; }

  std::vector<double> to_vector(const Value& v, const std::string& key) const {
    if (!v.is_array()) parse_fail(t_, key, v.line, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : std::get<std::vector<Value>>(v.data)) {
      if (!item.is_number()) parse_fail(t_, key, item.line, "array entries must be numbers");
      out.push_back(std::get<double>(item.data));
    }
    return out;
  }

  const Table& t_;
  std::set<std::string> used_;
};

const Table& require_section(const config::Document& doc, const std::string& name) {
  const Table* t = doc.section(name);
  if (!t) throw Error(ErrorKind::ParseError, "missing section [" + name + "]");
  return *t;
}

std::vector<double> initial_vector(Reader& rd, const std::string& key, std::size_t dim, std::mt19937_64& rng,
                                   bool required) {
  if (!rd.has(key)) {
    if (required) rd.get(key);  // raises the missing-key error
    return std::vector<double>(dim, 0.0);
  }
  if (rd.is_string(key)) {
    const std::string mode = rd.string(key);
    if (mode != "random") validation_fail(rd.table(), key, "only \"random\" is accepted as a string");
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(dim);
    for (double& x : v) x = dist(rng);
    return v;
  }
  auto v = rd.vector(key);
  if (v.size() != dim) {
    validation_fail(rd.table(), key, "expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

}  // namespace

Scenario parse_config(const std::string& text, const ScenarioOverrides& overrides) {
  const config::Document doc = config::parse_document(text);
  Scenario sc;

  Reader root(doc.root);
  const double format = root.number("format");
  if (format != 1.0) validation_fail(doc.root, "format", "unsupported format version");
  sc.name = root.string_or("name", "scenario");
  root.reject_unknown();

  std::set<std::string> known = {"graph", "reference_model", "consensus", "regulation", "sim"};
  for (const auto& s : doc.sections) {
    if (!known.count(s.name) && s.name.rfind("agents.", 0) != 0) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }

  // Graph.
  Reader graph(require_section(doc, "graph"));
  sc.graph = DirectedGraph(graph.matrix("weights"));
  graph.reject_unknown();
  const std::size_t n = sc.graph.size();
  sc.spectra = compute_spectra(sc.graph);

  // Reference model.
  Reader ref(require_section(doc, "reference_model"));
  sc.model.A = ref.matrix("A");
  sc.model.B = ref.matrix("B");
  ref.reject_unknown();
  sc.model.validate();
  const std::size_t q = sc.model.dim();

  // Consensus design.
  Reader cons(require_section(doc, "consensus"));
  ConsensusDesignInputs in;
  in.lambda = cons.number("lambda");
  in.g = cons.has("g") ? cons.vector("g") : std::vector<double>(n, 1.0);
  if (cons.has("eta_i")) {
    in.eta_i = cons.vector("eta_i");
  }
  in.eta = cons.number("eta");
  if (in.eta_i.empty()) in.eta_i.assign(n, in.eta);
  in.phi = cons.number("phi");
  in.unchecked = cons.boolean_or("unchecked", false);
  if (overrides.unchecked) in.unchecked = *overrides.unchecked;
  if (cons.has("beta")) in.beta_override = cons.number("beta");
  cons.reject_unknown();
  if (in.g.size() != n) validation_fail(cons.table(), "g", "expected one entry per agent");
  if (in.eta_i.size() != n) validation_fail(cons.table(), "eta_i", "expected one entry per agent");
  sc.design = design_consensus(sc.model, sc.spectra, in);

  // Sim parameters (needed before agents for the seed).
  Reader sim(require_section(doc, "sim"));
  sc.horizon = sim.number("horizon");
  sc.step = sim.number("step");
  const double seed = sim.number_or("seed", 0.0);
  if (seed < 0 || seed != std::floor(seed)) validation_fail(sim.table(), "seed", "must be a nonnegative integer");
  sc.seed = static_cast<std::uint64_t>(seed);
  const std::string kernel = sim.string_or("kernel", "serial");
  if (kernel == "serial") {
    sc.kernel = KernelMode::Serial;
  } else if (kernel == "parallel") {
    sc.kernel = KernelMode::Parallel;
  } else {
    validation_fail(sim.table(), "kernel", "expected \"serial\" or \"parallel\"");
  }
  sim.reject_unknown();
  if (overrides.horizon) sc.horizon = *overrides.horizon;
  if (overrides.step) sc.step = *overrides.step;
  if (overrides.kernel) sc.kernel = *overrides.kernel;

  // Regulation defaults shared by all agents.
  std::string model_name = "none";
  std::vector<GeneratorData> gen_data;
  std::shared_ptr<const FeedbackLaw> kappa;
  std::optional<SmallGain> sigma;
  std::optional<Reader> reg;
  if (const Table* t = doc.section("regulation")) {
    reg.emplace(*t);
    model_name = reg->string_or("model", "none");
  }
  const bool with_plants = model_name != "none";
  if (with_plants) {
    const std::string law = reg->string_or("kappa", "cubic");
    if (law == "cubic") {
      kappa = std::make_shared<CubicFeedback>(reg->number("kappa_k1"), reg->number_or("kappa_k3", 0.0));
    } else if (law == "linear") {
      kappa = std::make_shared<LinearFeedback>(reg->vector("kappa_gains"));
    } else {
      validation_fail(reg->table(), "kappa", "expected \"cubic\" or \"linear\"");
    }
    sigma = SmallGain::linear(reg->number("sigma_c"), reg->number("gamma0"));
    for (std::size_t j = 1;; ++j) {
      const std::string sfx = "_" + std::to_string(j);
      if (!reg->has("Psi" + sfx)) break;
      gen_data.push_back(GeneratorData{reg->matrix("Psi" + sfx), reg->matrix("Phi" + sfx), reg->matrix("M" + sfx),
                                       reg->matrix("N" + sfx)});
    }
  }
  if (reg) reg->reject_unknown();
  std::optional<SteadyStateGenerator> generator;
  if (with_plants) generator = build_generator(gen_data);

  // Agents.
  std::mt19937_64 rng(sc.seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string sec = "agents." + std::to_string(i + 1);
    const Table* t = doc.section(sec);
    if (!t) throw Error(ErrorKind::ParseError, "missing section [" + sec + "]");
    Reader ag(*t);
    AgentInitialState ic;
    ic.v = initial_vector(ag, "v0", q, rng, true);
    if (with_plants) {
      const std::string name = ag.string_or("model", model_name);
      const double w = ag.number_or("w", 0.0);
      auto model = make_builtin_model(name, w);
      validate_model(*model);
      RegulationPlant plant(model, *generator, kappa, *sigma);
      ic.z = initial_vector(ag, "z0", plant.z_dim(), rng, false);
      ic.x = initial_vector(ag, "x0", plant.relative_degree(), rng, false);
      ic.eta = initial_vector(ag, "eta0", plant.state_dim() - plant.z_dim() - plant.relative_degree(), rng, false);
      sc.plants.emplace_back(std::move(plant));
    } else {
      sc.plants.emplace_back(std::nullopt);
    }
    ag.reject_unknown();
    sc.initial.push_back(std::move(ic));
  }
  for (const auto& s : doc.sections) {
    if (s.name.rfind("agents.", 0) == 0) {
      const std::string idx = s.name.substr(7);
      std::size_t k = 0;
      const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), k);
      if (res.ec != std::errc() || res.ptr != idx.data() + idx.size() || k < 1 || k > n) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(s.line) + ": section [" + s.name +
                                               "] does not name an agent 1.." + std::to_string(n));
      }
    }
  }

  sc.validate();
  return sc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides) {
  return parse_config(read_text_file(path), overrides);
}

}  // namespace etsync
