#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "rbpn/resize.hpp"

namespace rbpn {
namespace {

// Reference values from tests/oracles/resize_oracle.py (an independent
// PyTorch port of MATLAB imresize, which computes in float32).
const std::vector<double> kDown4 = {
    0.486951947212, 0.481415420771, 0.522134065628, 0.483198702335, 0.501332581043, 0.515720486641,
    0.493651866913, 0.510095536709, 0.504057407379, 0.537605106831, 0.479843199253, 0.491806089878,
    0.502640843391, 0.499699473381, 0.480348557234, 0.521947264671, 0.500374913216, 0.474267542362,
    0.491747319698, 0.492348045111, 0.507596254349, 0.505545735359, 0.499765068293, 0.500281572342,
    0.509928405285, 0.484774619341, 0.506048440933, 0.482578635216, 0.503405690193, 0.517448842525,
    0.502649784088, 0.505419850349, 0.504602789879, 0.529688298702, 0.510306119919, 0.454867273569};
const std::vector<double> kDown3 = {
    0.485091805458, 0.487397074699, 0.476585149765, 0.456628203392, 0.532293081284, 0.475327640772,
    0.488606929779, 0.526377439499, 0.444634944201, 0.463705986738, 0.511031091213, 0.548153877258};
const std::vector<double> kDown2 = {
    0.417751312256, 0.567054748535, 0.445884704590, 0.476902008057, 0.476698875427, 0.519567489624,
    0.504978179932, 0.440649986267, 0.412952423096, 0.549691200256, 0.537987709045, 0.404886245728,
    0.526991844177, 0.440241813660, 0.577660560608, 0.513089179993, 0.510454177856, 0.394392013550,
    0.527238845825, 0.411176681519};
const std::vector<double> kUp4 = {
    -0.161075592041, -0.102512359619, 0.029984951019, 0.289116382599, 0.589244365692, 0.824968814850,
    0.900835514069, 0.835887432098, 0.700188159943, 0.561051845551, 0.472313404083, 0.397374629974,
    0.331198215485, 0.279666423798, 0.247558593750, 0.231933593750, -0.125949859619, -0.071537017822,
    0.051297664642, 0.290585041046, 0.568274974823, 0.788305759430, 0.864172458649, 0.814918041229,
    0.701656818390, 0.582364559174, 0.502834796906, 0.429582118988, 0.361460208893, 0.307464122772,
    0.274902343750, 0.259277343750, -0.051005363464, -0.005801200867, 0.095544874668, 0.290533721447,
    0.518226444721, 0.703621327877, 0.780445575714, 0.767912387848, 0.706676959991, 0.633314609528,
    0.575174152851, 0.505846917629, 0.433195650578, 0.373462378979, 0.339843750000, 0.324218750000,
    0.079848289490, 0.107672691345, 0.168286979198, 0.278715670109, 0.411293923855, 0.531972706318,
    0.613995075226, 0.677498340607, 0.722389698029, 0.742443561554, 0.728062570095, 0.666796982288,
    0.584843814373, 0.513328135014, 0.477539062500, 0.461914062500, 0.240464210510, 0.247796058655,
    0.260488331318, 0.271781861782, 0.292660295963, 0.336641967297, 0.422768115997, 0.571905612946,
    0.737190723419, 0.863371372223, 0.898562014103, 0.846411883831, 0.753940880299, 0.669102609158,
    0.630859375000, 0.615234375000, 0.398661613464, 0.388613700867, 0.361028134823, 0.290225803852,
    0.217935264111, 0.195514738560, 0.278084278107, 0.485878467560, 0.736797809601, 0.939014911652,
    1.009210348129, 0.963435709476, 0.863608300686, 0.769451916218, 0.729492187500, 0.713867187500,
    0.534705638885, 0.515902996063, 0.468942523003, 0.361749291420, 0.246445059776, 0.187179684639,
    0.250324666500, 0.452661335468, 0.705443084240, 0.910957396030, 0.981152772903, 0.935193777084,
    0.835579156876, 0.741692304611, 0.701782226562, 0.686157226562, 0.686670780182, 0.666182041168,
    0.617466568947, 0.513994097710, 0.398876309395, 0.325173735619, 0.346460163593, 0.472075402737,
    0.635992586613, 0.766471564770, 0.798549413681, 0.745213747025, 0.654110670090, 0.571005105972,
    0.533081054688, 0.517456054688, 0.823525905609, 0.804982662201, 0.763250708580, 0.682402729988,
    0.588320612907, 0.512858986855, 0.486815154552, 0.511114656925, 0.553726136684, 0.580943882465,
    0.561374902725, 0.498133420944, 0.418460130692, 0.349832296371, 0.314575195312, 0.298950195312,
    0.901302814484, 0.885223865509, 0.850945591927, 0.791198134422, 0.717795014381, 0.645275950432,
    0.586128294468, 0.535392463207, 0.487193882465, 0.436912000179, 0.378771543503, 0.308153390884,
    0.236991643906, 0.179145097733, 0.145874023438, 0.130249023438, 0.869750976562, 0.854125976562,
    0.820854902267, 0.763008356094, 0.691846609116, 0.621228456497, 0.563087999821, 0.512806117535,
    0.464607536793, 0.413871705532, 0.354724049568, 0.282204985619, 0.208801865578, 0.149054408073,
    0.114776134491, 0.098697185516, 0.701049804688, 0.685424804688, 0.650167703629, 0.581539869308,
    0.501866579056, 0.438625097275, 0.419056117535, 0.446273863316, 0.488885343075, 0.513184845448,
    0.487141013145, 0.411679387093, 0.317597270012, 0.236749291420, 0.195017337799, 0.176474094391,
    0.482543945312, 0.466918945312, 0.428994894028, 0.345889329910, 0.254786252975, 0.201450586319,
    0.233528435230, 0.364007413387, 0.527924597263, 0.653539836407, 0.674826264381, 0.601123690605,
    0.486005902290, 0.382533431053, 0.333817958832, 0.313329219818, 0.313842773438, 0.298217773438,
    0.258307695389, 0.164420843124, 0.064806222916, 0.018847227097, 0.089042603970, 0.294556915760,
    0.547338664532, 0.749675333500, 0.812820315361, 0.753554940224, 0.638250708580, 0.531057476997,
    0.484097003937, 0.465294361115, 0.286132812500, 0.270507812500, 0.230548083782, 0.136391699314,
    0.036564290524, -0.009210288525, 0.060985088348, 0.263202190399, 0.514121532440, 0.721915721893,
    0.804485261440, 0.782064735889, 0.709774196148, 0.638971865177, 0.611386299133, 0.601338386536,
    0.384765625000, 0.369140625000, 0.330897390842, 0.246059119701, 0.153588116169, 0.101437985897,
    0.136628627777, 0.262809276581, 0.428094387054, 0.577231884003, 0.663358032703, 0.707339704037,
    0.728218138218, 0.739511668682, 0.752203941345, 0.759535789490, 0.538085937500, 0.522460937500,
    0.486671864986, 0.415156185627, 0.333203017712, 0.271937429905, 0.257556438446, 0.277610301971,
    0.322501659393, 0.386004924774, 0.468027293682, 0.588706076145, 0.721284329891, 0.831713020802,
    0.892327308655, 0.920151710510, 0.675781250000, 0.660156250000, 0.626537621021, 0.566804349422,
    0.494153082371, 0.424825847149, 0.366685390472, 0.293323040009, 0.232087612152, 0.219554424286,
    0.296378672123, 0.481773555279, 0.709466278553, 0.904455125332, 1.005801200867, 1.051005363464,
    0.740722656250, 0.725097656250, 0.692535877228, 0.638539791107, 0.570417881012, 0.497165203094,
    0.417635440826, 0.298343181610, 0.185081958771, 0.135827541351, 0.211694240570, 0.431725025177,
    0.709414958954, 0.948702335358, 1.071537017822, 1.125949859619, 0.768066406250, 0.752441406250,
    0.720333576202, 0.668801784515, 0.602625370026, 0.527686595917, 0.438948154449, 0.299811840057,
    0.164112567902, 0.099164485931, 0.175031185150, 0.410755634308, 0.710883617401, 0.970015048981,
    1.102512359619, 1.161075592041};
const std::vector<double> kUp2 = {
    -0.126525878906, 0.152450561523, 0.710403442383, 0.870071411133, 0.631454467773, 0.451980590820,
    0.331649780273, 0.203125000000, 0.066406250000, -0.001953125000, 0.022674560547, 0.200031280518,
    0.554744720459, 0.721221923828, 0.699462890625, 0.621025085449, 0.485908508301, 0.342597961426,
    0.191093444824, 0.115341186523, 0.321075439453, 0.295192718506, 0.243427276611, 0.423522949219,
    0.835479736328, 0.959114074707, 0.794425964355, 0.621543884277, 0.440467834473, 0.349929809570,
    0.602218627930, 0.490669250488, 0.267570495605, 0.361415863037, 0.772205352783, 0.888446807861,
    0.710140228271, 0.624092102051, 0.630302429199, 0.633407592773, 0.866104125977, 0.786460876465,
    0.627174377441, 0.534900665283, 0.509639739990, 0.409023284912, 0.233051300049, 0.350242614746,
    0.760597229004, 0.965774536133, 0.791992187500, 0.719741821289, 0.575241088867, 0.490360260010,
    0.465099334717, 0.357089996338, 0.166332244873, 0.276714324951, 0.688236236572, 0.893997192383,
    0.379882812500, 0.290512084961, 0.111770629883, 0.227794647217, 0.638584136963, 0.732646942139,
    0.509983062744, 0.403507232666, 0.413219451904, 0.418075561523, 0.335342407227, 0.237995147705,
    0.043300628662, 0.151931762695, 0.563888549805, 0.758987426758, 0.737228393555, 0.630168914795,
    0.437808990479, 0.341629028320, 0.658370971680, 0.562191009521, 0.369831085205, 0.262771606445,
    0.241012573242, 0.436111450195, 0.848068237305, 0.956699371338, 0.762004852295, 0.664657592773,
    0.594512939453, 0.591976165771, 0.586902618408, 0.473033905029, 0.250370025635, 0.351825714111,
    0.777400970459, 0.900234222412, 0.720325469971, 0.630371093750, 0.143768310547, 0.327350616455,
    0.694515228271, 0.782718658447, 0.591960906982, 0.506130218506, 0.525226593018, 0.460773468018,
    0.312770843506, 0.238769531250, -0.081604003906, 0.195037841797, 0.748321533203, 0.937561035156,
    0.762756347656, 0.583282470703, 0.399139404297, 0.241043090820, 0.108993530273, 0.042968750000};

Tensor pattern(int c, int h, int w) {
  Tensor t(Shape{c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) t.at(ch, y, x) = ((7 * y + 13 * x + 29 * ch) % 17) / 16.0;
    }
  }
  return t;
}

struct OracleCase {
  const char* name;
  Shape in;
  double scale;
  Shape out;
  const std::vector<double>* want;
};

class ResizeOracle : public ::testing::TestWithParam<OracleCase> {};

TEST_P(ResizeOracle, MatchesReference) {
  const OracleCase& c = GetParam();
  const Tensor got = bicubic_resize(pattern(c.in.c, c.in.h, c.in.w), c.scale);
  ASSERT_EQ(got.shape(), c.out);
  ASSERT_EQ(got.numel(), c.want->size());
  for (std::size_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got[i], (*c.want)[i], 1e-6) << c.name << " @" << i;
}

INSTANTIATE_TEST_SUITE_P(Imresize, ResizeOracle,
                         ::testing::Values(OracleCase{"down4", {3, 16, 12}, 0.25, {3, 4, 3}, &kDown4},
                                           OracleCase{"down3", {1, 12, 9}, 1.0 / 3.0, {1, 4, 3}, &kDown3},
                                           OracleCase{"down2", {1, 10, 8}, 0.5, {1, 5, 4}, &kDown2},
                                           OracleCase{"up4", {1, 5, 4}, 4.0, {1, 20, 16}, &kUp4},
                                           OracleCase{"up2", {1, 6, 5}, 2.0, {1, 12, 10}, &kUp2}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Resize, ConstantStaysConstant) {
  const Tensor flat(Shape{3, 17, 23}, 0.5);
  for (double s : {0.25, 1.0 / 3.0, 0.5, 2.0, 4.0, 8.0}) {
    const Tensor r = bicubic_resize(flat, s);
    for (double v : r.values()) ASSERT_NEAR(v, 0.5, 1e-12) << "scale " << s;
  }
}

TEST(Resize, VimeoFrameSize) {
  const Tensor hr(Shape{3, 256, 448}, 0.25);
  EXPECT_EQ(bicubic_resize(hr, 0.25).shape(), (Shape{3, 64, 112}));
  EXPECT_EQ(bicubic_resize(Tensor(Shape{3, 64, 112}), 4.0).shape(), (Shape{3, 256, 448}));
}

TEST(Resize, WeightsPartitionUnity) {
  for (const auto& [in, out, scale] : {std::tuple{16, 4, 0.25}, std::tuple{9, 3, 1.0 / 3.0}, std::tuple{5, 20, 4.0}}) {
    const ResizeWeights w = resize_weights(in, out, scale);
    ASSERT_EQ(w.out_len, out);
    for (int i = 0; i < out; ++i) {
      double sum = 0.0;
      for (int j = 0; j < w.taps; ++j) {
        const std::size_t k = static_cast<std::size_t>(i * w.taps + j);
        EXPECT_GE(w.index[k], 0);
        EXPECT_LT(w.index[k], in);
        sum += w.weight[k];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Resize, CubicKernelShape) {
  EXPECT_DOUBLE_EQ(cubic_kernel(0.0), 1.0);
  EXPECT_DOUBLE_EQ(cubic_kernel(1.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_kernel(2.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_kernel(0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_kernel(1.5), -0.0625);
  EXPECT_DOUBLE_EQ(cubic_kernel(-1.5), cubic_kernel(1.5));
}

}  // namespace
}  // namespace rbpn
