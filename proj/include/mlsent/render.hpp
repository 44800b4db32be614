#pragma once

#include <string>
#include <string_view>

#include "mlsent/limex.hpp"

namespace mlsent::limex {

enum class RenderFormat { json, html, ansi };

RenderFormat parse_render_format(std::string_view name);

std::string render_explanation(const Explanation& ex, RenderFormat format);

// Inverse of the json rendering; ValidationError on malformed input.
Explanation parse_explanation_json(std::string_view text);

}  // namespace mlsent::limex
