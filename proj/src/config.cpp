#include "vortexlab/config.hpp"

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <string>

#include "config_schema.hpp"
#include "vortexlab/errors.hpp"

namespace vortexlab::config {

namespace {

const rapidjson::SchemaDocument& schema_document() {
  static const rapidjson::SchemaDocument doc = [] {
    rapidjson::Document d;
    d.Parse(detail::kSchema.data(), detail::kSchema.size());
    if (d.HasParseError()) throw ConfigError("embedded schema does not parse");
    return rapidjson::SchemaDocument(d);
  }();
  return doc;
}

std::string pointer_string(const rapidjson::Pointer& p) {
  rapidjson::StringBuffer sb;
  p.StringifyUriFragment(sb);
  std::string s = sb.GetString();
  return s.size() > 1 ? s.substr(1) : "/";  // drop the leading '#'
}

}  // namespace

std::string_view schema_text() { return detail::kSchema; }

nlohmann::json parse(std::string_view text) {
  rapidjson::Document doc;
  doc.Parse(text.data(), text.size());
  if (doc.HasParseError())
    throw ConfigError("config: JSON parse error at offset " + std::to_string(doc.GetErrorOffset()) + ": " +
                      rapidjson::GetParseError_En(doc.GetParseError()));

  rapidjson::SchemaValidator validator(schema_document());
  if (!doc.Accept(validator)) {
    const std::string where = pointer_string(validator.GetInvalidDocumentPointer());
    const std::string keyword = validator.GetInvalidSchemaKeyword();
    std::string detail;
    if (keyword == "additionalProperties") {
      // the document pointer ends at the undeclared member
      const auto slash = where.rfind('/');
      nlohmann::json::json_pointer ptr(where == "/" ? "" : where);
      if (slash != std::string::npos && !ptr.empty()) detail = " (unknown key '" + ptr.back() + "')";
    }
    throw ConfigError("config: schema violation at " + where + ": keyword '" + keyword + "'" + detail);
  }
  return nlohmann::json::parse(text);
}

}  // namespace vortexlab::config
