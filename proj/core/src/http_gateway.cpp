#include "indet/http_gateway.hpp"

#include <nlohmann/json.hpp>

#include "httplib.h"

namespace indet {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path = "/";
};

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  auto rest = url;
  const auto scheme_end = rest.find("://");
  if (scheme_end == std::string::npos) throw GatewayError("endpoint missing scheme: " + url);
  out.scheme = rest.substr(0, scheme_end);
  rest = rest.substr(scheme_end + 3);
  out.port = out.scheme == "https" ? 443 : 80;
  const auto slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) out.path = rest.substr(slash);
  const auto colon = hostport.find(':');
  if (colon != std::string::npos) {
    out.host = hostport.substr(0, colon);
    out.port = std::stoi(hostport.substr(colon + 1));
  } else {
    out.host = hostport;
  }
  if (out.host.empty()) throw GatewayError("endpoint missing host: " + url);
  return out;
}

json message_to_wire(const ChatMessage& m) {
  json jm{{"role", std::string(to_string(m.role))}};
  if (m.image) {
    jm["content"] = json::array({json{{"type", "text"}, {"text", m.content}},
                                 json{{"type", "image"},
                                      {"media_type", m.image->media_type},
                                      {"data", base64_encode(m.image->bytes)}}});
  } else {
    jm["content"] = m.content;
  }
  return jm;
}

json chat_body(const std::vector<ChatMessage>& messages, const ServiceProfile& profile,
               const ImagePayload* image) {
  json msgs = json::array();
  for (std::size_t i = 0; i < messages.size(); ++i) {
    ChatMessage m = messages[i];
    // The request image rides on the final user turn.
    if (image && i + 1 == messages.size() && !m.image) {
      m.image = *image;
    }
    msgs.push_back(message_to_wire(m));
  }
  return json{{"model", profile.model},
              {"temperature", profile.temperature},
              {"messages", std::move(msgs)}};
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw GatewayError(std::string("malformed response body: ") + e.what());
  }
}

std::string completion_text(const json& j) {
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& msg = j["choices"][0];
    if (msg.contains("message") && msg["message"].contains("content")) {
      return msg["message"]["content"].get<std::string>();
    }
    if (msg.contains("text")) return msg["text"].get<std::string>();
  }
  if (j.contains("content") && j["content"].is_string()) return j["content"].get<std::string>();
  throw GatewayError("response carries no completion text");
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back(table[v & 63]);
    i += 3;
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out += "=";
  }
  return out;
}

HttpGateway::HttpGateway(std::string api_key) : api_key_(std::move(api_key)) {}

std::string HttpGateway::post_json(const ServiceProfile& profile, const std::string& body) {
  if (profile.endpoint.empty()) {
    throw GatewayError("no endpoint configured for service '" + profile.name + "'");
  }
  const ParsedUrl url = parse_url(profile.endpoint);
  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    throw TransientError("transport failure contacting " + profile.endpoint);
  }
  if (res->status >= 500) {
    throw TransientError("server error " + std::to_string(res->status) + " from " +
                         profile.endpoint);
  }
  if (res->status >= 300) {
    throw GatewayError("request rejected with status " + std::to_string(res->status) + ": " +
                       res->body);
  }
  return res->body;
}

std::string HttpGateway::do_chat(const std::vector<ChatMessage>& messages,
                                 const ServiceProfile& profile) {
  const auto body = chat_body(messages, profile, nullptr);
  return completion_text(parse_body(post_json(profile, body.dump())));
}

std::string HttpGateway::do_vision_chat(const ImagePayload& image,
                                        const std::vector<ChatMessage>& messages,
                                        const ServiceProfile& profile) {
  const auto body = chat_body(messages, profile, &image);
  return completion_text(parse_body(post_json(profile, body.dump())));
}

std::vector<std::vector<double>> HttpGateway::do_embed(const std::vector<std::string>& texts,
                                                       const ServiceProfile& profile) {
  const json body{{"model", profile.model}, {"input", texts}};
  const json j = parse_body(post_json(profile, body.dump()));
  if (!j.contains("data") || !j["data"].is_array()) {
    throw GatewayError("embedding response missing data array");
  }
  std::vector<std::vector<double>> out;
  for (const auto& item : j["data"]) {
    out.push_back(item.at("embedding").get<std::vector<double>>());
  }
  return out;
}

std::vector<double> HttpGateway::do_score_image_text(const ImagePayload& image,
                                                     const std::vector<std::string>& texts,
                                                     const ServiceProfile& profile) {
  const json body{{"model", profile.model},
                  {"image", json{{"media_type", image.media_type},
                                 {"data", base64_encode(image.bytes)}}},
                  {"texts", texts}};
  const json j = parse_body(post_json(profile, body.dump()));
  if (!j.contains("scores") || !j["scores"].is_array()) {
    throw GatewayError("score response missing scores array");
  }
  return j["scores"].get<std::vector<double>>();
}

RleMask HttpGateway::do_segment(const ImagePayload& image, const BBoxNorm& bbox,
                                const ServiceProfile& profile) {
  const json body{{"model", profile.model},
                  {"image", json{{"media_type", image.media_type},
                                 {"data", base64_encode(image.bytes)}}},
                  {"bbox", json{{"x1", bbox.x1}, {"y1", bbox.y1}, {"x2", bbox.x2}, {"y2", bbox.y2}}}};
  const json j = parse_body(post_json(profile, body.dump()));
  if (!j.contains("mask")) throw GatewayError("segmentation unavailable");
  RleMask mask;
  mask.width = j["mask"].at("width").get<int>();
  mask.height = j["mask"].at("height").get<int>();
  mask.counts = j["mask"].at("counts").get<std::vector<std::int64_t>>();
  return mask;
}

}  // namespace indet
