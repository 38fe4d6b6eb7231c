#pragma once

#include <string>

#include "indet/gateway.hpp"

namespace indet {

/// Chat-completions-style JSON-over-HTTP transport. Request body:
///   {"model":..., "temperature":..., "messages":[{"role":...,"content":...}]}
/// Images are inlined as base64 data blocks inside message content parts.
/// 5xx and transport failures are retried by the Gateway base; 4xx and
/// malformed bodies are permanent faults.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(std::string api_key = {});

 protected:
  std::string do_chat(const std::vector<ChatMessage>& messages,
                      const ServiceProfile& profile) override;
  std::string do_vision_chat(const ImagePayload& image, const std::vector<ChatMessage>& messages,
                             const ServiceProfile& profile) override;
  std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts,
                                            const ServiceProfile& profile) override;
  std::vector<double> do_score_image_text(const ImagePayload& image,
                                          const std::vector<std::string>& texts,
                                          const ServiceProfile& profile) override;
  RleMask do_segment(const ImagePayload& image, const BBoxNorm& bbox,
                     const ServiceProfile& profile) override;

 private:
  std::string post_json(const ServiceProfile& profile, const std::string& body);

  std::string api_key_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace indet
