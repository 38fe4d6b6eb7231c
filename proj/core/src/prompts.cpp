#include "indet/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "indet/text.hpp"

namespace indet {

using nlohmann::json;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open prompt file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open prompt file " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) {
    content.pop_back();
  }
  return content;
}

PromptLibrary make_builtin() {
  PromptLibrary lib;

  lib.caption_prompts = {
      "Describe the following image in detail",
      "Provide a detailed description of the given image",
      "Give an elaborate explanation of the image you see",
      "Share a comprehensive rundown of the presented image",
      "Offer a thorough analysis of the image",
      "Explain the various aspects of the image before you",
      "Clarify the contents of the displayed image with great detail",
      "Characterize the image using a well-detailed description",
      "Break down the elements of the image in a detailed manner",
      "Walk through the important details of the image",
      "Portray the image with a rich, descriptive narrative",
      "Narrate the contents of the image with precision",
      "Analyze the image in a comprehensive and detailed manner",
      "Illustrate the image through a descriptive explanation",
      "Examine the image closely and share its details",
      "Write an exhaustive depiction of the given image",
  };

  lib.local_prompts = {
      "Describe the objects in the red box.",
      "Take a look at this image and describe What's in the red box.",
      "Please provide a description of the object in the red box.",
      "Could you describe the contents in the red box of the image for me?",
      "Use one sentence to index the objects in the red box.",
      "Output a sentence describing the objects in the red box, so that people can locate the "
      "objects without ambiguity through this sentence.",
      "Look carefully at the objects in the red box and describe them in one sentence to "
      "distinguish them from other objects.",
  };

  lib.cot_prompts = {
      "What is the object inside the red bounding box?",
      "What are the attributes of the object within the red bounding box?",
      "Which objects are around the target object in the red box?",
      "What is the relationship between the object inside the red bounding box and the "
      "surrounding objects?",
      "Please review the image once again, and if there are any inaccuracies in your previous "
      "answers regarding the object's attributes and relationships, kindly correct them.",
      "Look carefully at the objects in the red box and describe them in one sentence to "
      "distinguish them from other objects.",
  };

  lib.global_task =
      "You are an AI visual assistant that can analyze a single image.\n"
      "\n"
      "User will give you several sentences, describing the same image you are observing. In "
      "addition, specific interested object locations within the image are given, along with "
      "detailed coordinates. These coordinates are in the form of bounding boxes, represented as "
      "(x1, y1, x2, y2) with floating numbers ranging from 0 to 1. These values correspond to the "
      "left top x, left top y, right bottom x, and right bottom y.\n"
      "\n"
      "Using the provided caption and bounding box information, give descriptions about the "
      "visual content of each interested objects as if you are seeing the image, as an "
      "assistant:\n"
      "\n"
      "(1) give descriptions about the object itself, including object types, object functions, "
      "object counts, object locations, object actions, etc.\n"
      "(2) give descriptions about the object and other objects, including the relative "
      "positions between objects, the interaction between objects in the image, etc.\n"
      "\n"
      "Descriptions should be a series of phrases, not whole sentence. Give descriptions for "
      "specific interested objects only, do not centered on other objects.\n"
      "Again, give descriptions centered on specific objects only.";

  lib.global_examples = {
      {// seesaw scene
       "Two children, a girl and a boy are practicing their writing.\n"
       "Two children sit on a small seesaw in the sand.\n"
       "Two children sitting on a teeter totter.\n"
       "2 kids playing on a seesaw.\n"
       "Two kids sit on a seesaw.\n"
       "2 kids/two kids/two children: [0.09, 0.59, 0.49, 0.94]\n"
       "girl: [0.09, 0.59, 0.23, 0.92]\n"
       "boy: [0.34, 0.62, 0.49, 0.94]\n"
       "seesaw/small seesaw/teeter totter: [0.06, 0.83, 0.57, 0.93]\n"
       "sand: [0.01, 0.61, 1.0, 1.0]",
       "**[2 kids/two kids/two children]**\n"
       "(1) persons, children, two kids, children learning, kids playing, kids sitting, children "
       "practicing their writing\n"
       "(2) 2 kids playing on a seesaw, Two kids sitting on a seesaw, a girl and a boy, two "
       "person on the teeter totter, kids by the sea\n"
       "**[girl]**\n"
       "(1) girl, kid on the left of the image, girl sitting, girl playing\n"
       "(2) kid playing with the boy, girl sitting on the small seesaw, girl playing in the sand, "
       "girl reading a book, a friend of the boy on the right, the taller kid\n"
       "**[boy]**\n"
       "(1) boy, kid on the right, boy sitting, boy playing, boy practicing his writing\n"
       "(2) kid playing with the girl, boy sitting on a teeter totter, a friend of the girl on "
       "the left, boy playing in the sand\n"
       "**[seesaw/small seesaw/teeter totter]**\n"
       "(1) small seesaw, teeter totter, item to be played on, common facilities in parks and "
       "playground, game of two people\n"
       "(2) seesaw in the sand, item the kids are sitting on, item the girl is sitting on, item "
       "the boy is playing on\n"
       "**[sand]**\n"
       "(1) common by the sea, the background of the scene\n"
       "(2) item on which the seesaw is placed, item on which the kids are standing"},
      {// kitchen scene
       "A woman prepares vegetables on a wooden counter in a sunlit kitchen.\n"
       "A chef chops carrots on a cutting board next to a steel bowl.\n"
       "Someone is cooking at home with fresh produce laid out.\n"
       "woman/chef: [0.12, 0.1, 0.55, 0.97]\n"
       "cutting board: [0.35, 0.62, 0.78, 0.85]\n"
       "steel bowl/bowl: [0.74, 0.55, 0.95, 0.72]\n"
       "carrots: [0.4, 0.6, 0.62, 0.7]",
       "**[woman/chef]**\n"
       "(1) person, cook, woman preparing food, chef at work, adult standing\n"
       "(2) woman chopping the carrots, person at the cutting board, cook next to the steel bowl, "
       "the one holding a knife\n"
       "**[cutting board]**\n"
       "(1) wooden board, kitchen tool, flat surface for chopping\n"
       "(2) board under the carrots, item the woman works on, board beside the bowl\n"
       "**[steel bowl/bowl]**\n"
       "(1) metal bowl, round container, kitchenware\n"
       "(2) bowl next to the cutting board, container near the carrots, bowl by the woman's hand\n"
       "**[carrots]**\n"
       "(1) vegetables, orange produce, chopped food\n"
       "(2) carrots on the cutting board, food the woman is chopping, produce beside the bowl"},
      {// street scene
       "A cyclist waits at a crosswalk beside a red sedan during the evening commute.\n"
       "A red car and a bicycle stop at a traffic light on a busy street.\n"
       "red sedan/red car: [0.05, 0.45, 0.48, 0.8]\n"
       "bicycle/bike: [0.55, 0.5, 0.75, 0.82]\n"
       "cyclist: [0.56, 0.3, 0.73, 0.78]\n"
       "traffic light: [0.44, 0.05, 0.5, 0.22]",
       "**[red sedan/red car]**\n"
       "(1) vehicle, red car, sedan, car waiting, automobile on the road\n"
       "(2) car beside the bicycle, vehicle stopped at the traffic light, sedan left of the "
       "cyclist\n"
       "**[bicycle/bike]**\n"
       "(1) bike, two-wheeler, parked bicycle, ride of the cyclist\n"
       "(2) bicycle next to the red car, bike under the cyclist, bike waiting at the light\n"
       "**[cyclist]**\n"
       "(1) person, rider, cyclist waiting, commuter\n"
       "(2) person on the bicycle, rider beside the red sedan, cyclist watching the traffic "
       "light\n"
       "**[traffic light]**\n"
       "(1) signal, street fixture, light above the road\n"
       "(2) light the cyclist watches, signal above the car, fixture controlling the crosswalk"},
  };

  lib.summarize_task =
      "You are an AI language assistant that can analyze phrases and sentenses.\n"
      "User will give you descriptions of several objects in an image. Descriptions of each "
      "object are several phrases or short sentences.\n"
      "\n"
      "The given objects are expected to have similar properties. Based on the descriptions, "
      "find the common properties between given objects and summerize precisely as an assistant: "
      "common properties between objects can include same types, same functions, same color "
      "components, same poses, same relationships with other objects, engaging in the same "
      "activity, etc.\n"
      "\n"
      "If there are no common properties between given objects, just tell that there are no "
      "common properties. Your summery should also be phrases. Do not repeat.\n"
      "\n"
      "Give similarity between all given objects, contrary properties like different positions "
      "or different colors of clothes should not be included together in your descriptions.";

  lib.summarize_examples = {
      {"Objects and their descriptions:\n"
       "## object 2: girl sitting on bed, girl with toy, girl sitting on bed\n"
       "## object 3: man looking down, boy sitting on the bed, man sitting on bed\n"
       "Please find an summarize the similar properties of given objects.",
       "Summary of common properties of given objects:\n"
       "## people on bed; person sitting on bed; people playing on bed; who sitting on bed;"},
  };

  lib.leveling_task =
      "You are an AI language assistant that can analyze the language complexity of sentences "
      "or phrases.\n"
      "User will give you a phrase or sentence describing a specific object in a image, which "
      "could be composed of nouns, adjectives, verbs, etc.\n"
      "Grade the description according to its language complexity as an AI language assistant.\n"
      "\n"
      "The language complexity of a phrase or sentence describing a specific object in an image "
      "can be graded into four levels:\n"
      "Level 0. A single noun is used to give the object's name or type.\n"
      "Level 1. A phrase with one or more nouns, verbs and abjectives is used to describe simple "
      "attributes of the object itself, such as its color, its function or purpose, location in "
      "the image, or actions.\n"
      "Level 2 A phrase with one or more nouns, verbs and abjectives is used to describe the "
      "object by referring to other objects in the image and describing their relationship, such "
      "as their relative positions or interactions.\n"
      "Level 3. A long phrase or sentence is used to describe attributes of the object and also "
      "refer to a few other objects in detail, or describe a complicated or "
      "comprehensive/implicit relationship between multiple objects.\n"
      "The level of descriptions increase as the language complexity and length increase, and "
      "also increase as the phrases or sentences become more descriptive and use more abjectives "
      "and nouns to describe the object.";

  lib.leveling_examples = {
      {"Grade description: people who are sitting under an umbrella.",
       "My grading for description people who are sitting under an umbrella: This phrase is "
       "referring to the object of people, and gives simple object action of sitting and object "
       "relationship with the umbrella. The level of this description is: level 2."},
  };

  lib.rewrite_prompt =
      "I want you to act as a synonymous expression provider. I will give you a text of phrase "
      "or short sentence, which is an expression that describes a main object while mentioning "
      "some other objects. And you will reply to me with a new expression that have the same "
      "semantic meaning and describe the same main object as the provided expression. The new "
      "expressions should also be phrases or short sentences no longer than 25 words. Do not "
      "write explanations on replies. Do not repeat.";

  return lib;
}

}  // namespace

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l = make_builtin();
    l.validate();
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  lib.caption_prompts = read_lines(dir / "caption_prompts.txt");
  lib.local_prompts = read_lines(dir / "local_prompts.txt");
  lib.cot_prompts = read_lines(dir / "cot_prompts.txt");
  lib.global_task = read_text(dir / "global_task.txt");
  lib.summarize_task = read_text(dir / "summarize_task.txt");
  lib.leveling_task = read_text(dir / "leveling_task.txt");
  lib.rewrite_prompt = read_text(dir / "rewrite_prompt.txt");

  auto read_json = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw PipelineError("cannot open prompt file " + p.string());
    return json::parse(in);
  };
  for (const auto& e : read_json(dir / "global_examples.json")) {
    lib.global_examples.push_back(
        {e.at("image2text").get<std::string>(), e.at("response").get<std::string>()});
  }
  for (const auto& e : read_json(dir / "summarize_examples.json")) {
    lib.summarize_examples.push_back(
        {e.at("prompt").get<std::string>(), e.at("response").get<std::string>()});
  }
  for (const auto& e : read_json(dir / "leveling_examples.json")) {
    lib.leveling_examples.push_back(
        {e.at("prompt").get<std::string>(), e.at("response").get<std::string>()});
  }
  lib.validate();
  return lib;
}

void PromptLibrary::validate() const {
  if (caption_prompts.empty()) throw PipelineError("prompt library: no caption prompts");
  if (local_prompts.empty()) throw PipelineError("prompt library: no local prompts");
  if (cot_prompts.size() != 6) {
    throw PipelineError("prompt library: chain-of-thought needs exactly 6 steps, got " +
                        std::to_string(cot_prompts.size()));
  }
  if (global_task.empty() || summarize_task.empty() || leveling_task.empty() ||
      rewrite_prompt.empty()) {
    throw PipelineError("prompt library: missing task description");
  }
  for (const auto& ex : global_examples) {
    // Every example response must contain at least one "[name]" block with
    // (1) and (2) lines.
    if (ex.response.find('[') == std::string::npos ||
        ex.response.find("(1)") == std::string::npos ||
        ex.response.find("(2)") == std::string::npos) {
      throw PipelineError("prompt library: malformed in-context example response");
    }
  }
}

}  // namespace indet
