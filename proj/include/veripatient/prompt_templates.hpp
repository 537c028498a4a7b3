#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace veripatient::llm {

enum class TemplateId { patient, verifier, doctor, judge };

/// Raw template text with `{{variable}}` placeholders.
const std::string& template_text(TemplateId id);

/// Placeholder names appearing in a template, in order of appearance.
std::vector<std::string> template_placeholders(TemplateId id);

/// Substitute every placeholder verbatim. Missing variables raise
/// std::invalid_argument ("unbound placeholder: <name>"); variables the
/// template does not use are ignored and reported through `warnings`
/// when given.
std::string render_template(TemplateId id, const std::map<std::string, std::string>& variables,
                            std::vector<std::string>* warnings = nullptr);

} // namespace veripatient::llm
