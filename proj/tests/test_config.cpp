#include <doctest.h>

#include <string>

#include "etsync/config.hpp"
#include "etsync/errors.hpp"
#include "support.hpp"

using namespace etsync;
using namespace etsync::testing;

namespace {

const std::string kBase = R"(format = 1
name = "base"
[graph]
weights = [[0, 1], [1, 0]]
[reference_model]
A = [[0, -1], [1, 0]]
B = [[0], [1]]
[consensus]
lambda = 0.1
eta = 0.02
phi = 0.01
[agents.1]
v0 = [1, 0]
[agents.2]
v0 = [0, 1]
[sim]
horizon = 1
step = 0.0001
)";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  return text;
}

struct Failure {
  ErrorKind kind;
  std::string message;
};

Failure failure(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return {e.kind(), e.what()};
  }
  FAIL("parse unexpectedly succeeded");
  return {};
}

}  // namespace

TEST_SUITE("document parser") {
  TEST_CASE("values of every kind") {
    const auto doc = config::parse_document(
        "a = 1.5e-3  # trailing comment\nb = true\nc = \"text\"\n[s]\nm = [[1, 2],\n  [3, 4],\n]\nneg = -2\n");
    CHECK(std::get<double>(doc.root.entries.at("a").data) == 1.5e-3);
    CHECK(std::get<bool>(doc.root.entries.at("b").data));
    CHECK(std::get<std::string>(doc.root.entries.at("c").data) == "text");
    const auto* s = doc.section("s");
    REQUIRE(s != nullptr);
    CHECK(s->entries.at("m").is_array());
    CHECK(s->entries.at("m").line == 5);
    CHECK(std::get<double>(s->entries.at("neg").data) == -2.0);
    CHECK(doc.section("missing") == nullptr);
  }

  TEST_CASE("errors carry the line number") {
    auto message = [](const std::string& text) {
      try {
        config::parse_document(text);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        return std::string(e.what());
      }
      FAIL("expected a parse error");
      return std::string();
    };
    CHECK(message("a = 1\nb = 1x\n").find(": line 2:") != std::string::npos);
    CHECK(message("a = 1\n\n[s\n").find(": line 3:") != std::string::npos);
    CHECK(message("a = 1\na = 2\n").find("duplicate key") != std::string::npos);
    CHECK(message("[s]\n[s]\n").find("duplicate section") != std::string::npos);
    CHECK(message("a = [1, 2\n").find("unterminated array") != std::string::npos);
    CHECK(message("a = \"open\n").find("unterminated string") != std::string::npos);
    CHECK(message("a\n").find("expected '='") != std::string::npos);
    CHECK(message("a = 1 2\n").find("trailing") != std::string::npos);
  }
}

TEST_SUITE("scenario loading") {
  TEST_CASE("minimal consensus-only file") {
    const auto sc = parse_config(kBase);
    CHECK(sc.name == "base");
    CHECK(sc.agents() == 2);
    CHECK(sc.design.g == std::vector<double>{1, 1});
    CHECK(sc.design.eta_i == std::vector<double>{0.02, 0.02});
    CHECK(sc.kernel == KernelMode::Serial);
    CHECK_FALSE(sc.has_plants());
  }

  TEST_CASE("bundled scenarios load") {
    for (const char* name : {"paper_example.toml", "checked_example.toml", "chain2_example.toml"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_scenario(scenario_path(name)));
    }
  }

  TEST_CASE("overrides take precedence") {
    const auto sc = parse_config(kBase, {.horizon = 0.5, .step = 0.00005, .kernel = KernelMode::Parallel});
    CHECK(sc.horizon == 0.5);
    CHECK(sc.step == 0.00005);
    CHECK(sc.kernel == KernelMode::Parallel);
  }

  TEST_CASE("unchecked override relaxes the lambda bound") {
    const std::string text = replaced(kBase, "lambda = 0.1", "lambda = 1.5");
    CHECK(failure(text).kind == ErrorKind::LambdaOutOfRange);
    CHECK_NOTHROW(parse_config(text, {.unchecked = true}));
  }

  TEST_CASE("self-loop weight is a validation error") {
    const auto f = failure(replaced(kBase, "[[0, 1], [1, 0]]", "[[0.5, 1], [1, 0]]"));
    CHECK(f.kind == ErrorKind::ValidationError);
    CHECK(f.message.find("a[1][1]") != std::string::npos);
  }

  TEST_CASE("graph that is not strongly connected") {
    CHECK(failure(replaced(kBase, "[[0, 1], [1, 0]]", "[[0, 0], [1, 0]]")).kind == ErrorKind::NotStronglyConnected);
  }

  TEST_CASE("unknown keys and sections are rejected with their line") {
    const auto k = failure(replaced(kBase, "phi = 0.01", "phi = 0.01\nphy = 2"));
    CHECK(k.kind == ErrorKind::ParseError);
    CHECK(k.message.find("line 12") != std::string::npos);
    CHECK(k.message.find("phy") != std::string::npos);
    CHECK(failure(kBase + "[extra]\nx = 1\n").message.find("unknown section") != std::string::npos);
    CHECK(failure(kBase + "[agents.3]\nv0 = [0, 0]\n").kind == ErrorKind::ParseError);
  }

  TEST_CASE("missing pieces") {
    CHECK(failure(replaced(kBase, "eta = 0.02\n", "")).message.find("missing key 'eta'") != std::string::npos);
    CHECK(failure(replaced(kBase, "[agents.2]\nv0 = [0, 1]\n", "")).message.find("[agents.2]") != std::string::npos);
  }

  TEST_CASE("shape and type errors") {
    CHECK(failure(replaced(kBase, "v0 = [1, 0]", "v0 = [1, 0, 0]")).kind == ErrorKind::ValidationError);
    CHECK(failure(replaced(kBase, "A = [[0, -1], [1, 0]]", "A = [[0, -1], [1]]")).kind == ErrorKind::ParseError);
    CHECK(failure(replaced(kBase, "eta = 0.02", "eta = \"0.02\"")).kind == ErrorKind::ParseError);
    CHECK(failure(replaced(kBase, "format = 1", "format = 2")).kind == ErrorKind::ValidationError);
    CHECK(failure(replaced(kBase, "step = 0.0001", "step = 0.0001\nkernel = \"gpu\"")).kind ==
          ErrorKind::ValidationError);
    CHECK(failure(replaced(kBase, "step = 0.0001", "step = 0.0001\nseed = 1.5")).kind == ErrorKind::ValidationError);
  }

  TEST_CASE("regulation section with an unknown model") {
    const std::string reg = R"([regulation]
model = "missing_model"
kappa = "cubic"
kappa_k1 = 30
sigma_c = 0.5
gamma0 = 40
Psi_1 = [[1, 0]]
Phi_1 = [[0, -1], [1, 0]]
M_1 = [[-1, 0], [0, -2]]
N_1 = [[1], [2]]
)";
    CHECK(failure(kBase + reg).kind == ErrorKind::ValidationError);
  }
}
