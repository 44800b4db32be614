#include <doctest.h>

#include <json.hpp>

#include "mlsent/error.hpp"
#include "mlsent/render.hpp"

using namespace mlsent;
using namespace mlsent::limex;

namespace {

Explanation sample() {
  Explanation ex;
  ex.text = "I <hate> this & 不良品";
  ex.target_class = Label::negative;
  ex.probe_probability = 0.87;
  ex.intercept = 0.12;
  ex.surrogate_r2 = 0.95;
  ex.attributions = {{"<hate>", 2, 8, 0.41}, {"不", 16, 19, -0.05}, {"this", 9, 13, 0.0}};
  return ex;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("json round trip") {
  const Explanation ex = sample();
  const Explanation back = parse_explanation_json(render_explanation(ex, RenderFormat::json));
  CHECK(back.text == ex.text);
  CHECK(back.target_class == ex.target_class);
  CHECK(back.probe_probability == ex.probe_probability);
  CHECK(back.intercept == ex.intercept);
  CHECK(back.surrogate_r2 == ex.surrogate_r2);
  CHECK(back.attributions == ex.attributions);
  const auto j = nlohmann::json::parse(render_explanation(ex, RenderFormat::json));
  CHECK(j.size() == 7);
  CHECK(j["version"] == 1);
  CHECK_THROWS_AS(parse_explanation_json("{}"), ValidationError);
  CHECK_THROWS_AS(parse_explanation_json("nope"), ValidationError);
}

TEST_CASE("html highlights each weighted token once and escapes text") {
  const std::string html = render_explanation(sample(), RenderFormat::html);
  CHECK(count(html, "class=\"hl ") == 2);
  CHECK(count(html, "class=\"hl pos\"") == 1);
  CHECK(count(html, "class=\"hl neg\"") == 1);
  CHECK(html.find("&lt;hate&gt;") != std::string::npos);
  CHECK(html.find("<hate>") == std::string::npos);
  CHECK(html.find("&amp;") != std::string::npos);
  CHECK(html.find("rgba(255, 127, 14, 0.900)") != std::string::npos);
}

TEST_CASE("ansi output colours tokens") {
  const std::string ansi = render_explanation(sample(), RenderFormat::ansi);
  CHECK(ansi.find("\x1b[30;48;5;208m<hate>\x1b[0m") != std::string::npos);
  CHECK(ansi.find("negative") != std::string::npos);
  CHECK(parse_render_format("ansi") == RenderFormat::ansi);
  CHECK_THROWS_AS(parse_render_format("pdf"), ArgumentError);
}
