#pragma once

// Adaptive eighth-order Dormand-Prince pair with 7th-order dense output,
// following Hairer, Norsett and Wanner, "Solving Ordinary Differential
// Equations I", 2nd ed., and the DOP853.F reference code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace wsb {

struct Dop853Options {
  double rtol = 1e-13;
  double atol = 1e-13;
  double h_max = 0.0;  // 0: unbounded
  double h_init = 0.0;  // 0: automatic
};

/// Step-by-step integrator. `Rhs` is callable as rhs(t, const double* y,
/// double* dydt). The caller drives the loop with step() and queries the
/// dense interpolant of the last accepted step.
template <std::size_t N, class Rhs>
class Dop853 {
 public:
  using State = std::array<double, N>;

  Dop853(Rhs rhs, Dop853Options opt) : rhs_(std::move(rhs)), opt_(opt) {}

  void reset(double t0, const State& y0, double direction) {
    t_ = t0;
    y_ = y0;
    dir_ = direction >= 0.0 ? 1.0 : -1.0;
    reject_ = false;
    dense_ready_ = false;
    accepted_ = 0;
    rejected_ = 0;
    evals_ = 0;
    rhs_(t_, y_.data(), k1_.data());
    ++evals_;
    h_ = opt_.h_init > 0.0 ? dir_ * opt_.h_init : initial_step();
  }

  /// Attempts steps until one is accepted, never stepping past t_limit.
  /// Returns false on step-size underflow.
  bool step(double t_limit) {
    dense_ready_ = false;
    bool last_reject_flag = reject_;
    for (;;) {
      if (0.1 * std::abs(h_) <= std::abs(t_) * kUround || std::abs(h_) < 1e-300) return false;
      if ((t_ + 1.01 * h_ - t_limit) * dir_ > 0.0) {
        h_ = t_limit - t_;
      }
      stages();
      const double err = std::abs(h_) * error_estimate();
      const double fac11 = std::pow(err, 0.125);
      double fac = std::max(1.0 / 6.0, std::min(3.0, fac11 / kSafe));
      double hnew = h_ / fac;
      if (err <= 1.0) {
        ++accepted_;
        rhs_(t_ + h_, ynew_.data(), fnew_.data());
        ++evals_;
        y_old_ = y_;
        t_old_ = t_;
        h_used_ = h_;
        y_ = ynew_;
        t_ = t_ + h_;
        if (opt_.h_max > 0.0 && std::abs(hnew) > opt_.h_max) hnew = dir_ * opt_.h_max;
        if (last_reject_flag) hnew = dir_ * std::min(std::abs(hnew), std::abs(h_));
        reject_ = false;
        // Keep k1 of the accepted step for the dense interpolant.
        k1_old_ = k1_;
        k1_ = fnew_;
        h_ = hnew;
        return true;
      }
      hnew = h_ / std::min(3.0, fac11 / kSafe);
      reject_ = true;
      last_reject_flag = true;
      ++rejected_;
      h_ = hnew;
    }
  }

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const State& y() const { return y_; }
  const State& y_old() const { return y_old_; }
  double direction() const { return dir_; }
  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }
  long evaluations() const { return evals_; }

  /// Dense output on [t_old, t] of the last accepted step.
  State dense(double t) {
    if (!dense_ready_) prepare_dense();
    const double s = (t - t_old_) / h_used_;
    const double s1 = 1.0 - s;
    State out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = rc1_[i] + s * (rc2_[i] + s1 * (rc3_[i] + s * (rc4_[i] + s1 * (rc5_[i] + s * (rc6_[i] + s1 * (rc7_[i] + s * rc8_[i]))))));
    }
    return out;
  }

 private:
  static constexpr double kUround = 2.3e-16;
  static constexpr double kSafe = 0.9;

  // Butcher tableau.
  static constexpr double c2 = 0.526001519587677318785587544488E-01;
  static constexpr double c3 = 0.789002279381515978178381316732E-01;
  static constexpr double c4 = 0.118350341907227396726757197510E+00;
  static constexpr double c5 = 0.281649658092772603273242802490E+00;
  static constexpr double c6 = 0.333333333333333333333333333333E+00;
  static constexpr double c7 = 0.25E+00;
  static constexpr double c8 = 0.307692307692307692307692307692E+00;
  static constexpr double c9 = 0.651282051282051282051282051282E+00;
  static constexpr double c10 = 0.6E+00;
  static constexpr double c11 = 0.857142857142857142857142857142E+00;
  static constexpr double c14 = 0.1E+00;
  static constexpr double c15 = 0.2E+00;
  static constexpr double c16 = 0.777777777777777777777777777778E+00;

  static constexpr double b1 = 5.42937341165687622380535766363E-2;
  static constexpr double b6 = 4.45031289275240888144113950566E0;
  static constexpr double b7 = 1.89151789931450038304281599044E0;
  static constexpr double b8 = -5.8012039600105847814672114227E0;
  static constexpr double b9 = 3.1116436695781989440891606237E-1;
  static constexpr double b10 = -1.52160949662516078556178806805E-1;
  static constexpr double b11 = 2.01365400804030348374776537501E-1;
  static constexpr double b12 = 4.47106157277725905176885569043E-2;

  static constexpr double bhh1 = 0.244094488188976377952755905512E+00;
  static constexpr double bhh2 = 0.733846688281611857341361741547E+00;
  static constexpr double bhh3 = 0.220588235294117647058823529412E-01;

  static constexpr double er1 = 0.1312004499419488073250102996E-01;
  static constexpr double er6 = -0.1225156446376204440720569753E+01;
  static constexpr double er7 = -0.4957589496572501915214079952E+00;
  static constexpr double er8 = 0.1664377182454986536961530415E+01;
  static constexpr double er9 = -0.3503288487499736816886487290E+00;
  static constexpr double er10 = 0.3341791187130174790297318841E+00;
  static constexpr double er11 = 0.8192320648511571246570742613E-01;
  static constexpr double er12 = -0.2235530786388629525884427845E-01;

  static constexpr double a21 = 5.26001519587677318785587544488E-2;
  static constexpr double a31 = 1.97250569845378994544595329183E-2;
  static constexpr double a32 = 5.91751709536136983633785987549E-2;
  static constexpr double a41 = 2.95875854768068491816892993775E-2;
  static constexpr double a43 = 8.87627564304205475450678981324E-2;
  static constexpr double a51 = 2.41365134159266685502369798665E-1;
  static constexpr double a53 = -8.84549479328286085344864962717E-1;
  static constexpr double a54 = 9.24834003261792003115737966543E-1;
  static constexpr double a61 = 3.7037037037037037037037037037E-2;
  static constexpr double a64 = 1.70828608729473871279604482173E-1;
  static constexpr double a65 = 1.25467687566822425016691814123E-1;
  static constexpr double a71 = 3.7109375E-2;
  static constexpr double a74 = 1.70252211019544039314978060272E-1;
  static constexpr double a75 = 6.02165389804559606850219397283E-2;
  static constexpr double a76 = -1.7578125E-2;
  static constexpr double a81 = 3.70920001185047927108779319836E-2;
  static constexpr double a84 = 1.70383925712239993810214054705E-1;
  static constexpr double a85 = 1.07262030446373284651809199168E-1;
  static constexpr double a86 = -1.53194377486244017527936158236E-2;
  static constexpr double a87 = 8.27378916381402288758473766002E-3;
  static constexpr double a91 = 6.24110958716075717114429577812E-1;
  static constexpr double a94 = -3.36089262944694129406857109825E0;
  static constexpr double a95 = -8.68219346841726006818189891453E-1;
  static constexpr double a96 = 2.75920996994467083049415600797E1;
  static constexpr double a97 = 2.01540675504778934086186788979E1;
  static constexpr double a98 = -4.34898841810699588477366255144E1;
  static constexpr double a101 = 4.77662536438264365890433908527E-1;
  static constexpr double a104 = -2.48811461997166764192642586468E0;
  static constexpr double a105 = -5.90290826836842996371446475743E-1;
  static constexpr double a106 = 2.12300514481811942347288949897E1;
  static constexpr double a107 = 1.52792336328824235832596922938E1;
  static constexpr double a108 = -3.32882109689848629194453265587E1;
  static constexpr double a109 = -2.03312017085086261358222928593E-2;
  static constexpr double a111 = -9.3714243008598732571704021658E-1;
  static constexpr double a114 = 5.18637242884406370830023853209E0;
  static constexpr double a115 = 1.09143734899672957818500254654E0;
  static constexpr double a116 = -8.14978701074692612513997267357E0;
  static constexpr double a117 = -1.85200656599969598641566180701E1;
  static constexpr double a118 = 2.27394870993505042818970056734E1;
  static constexpr double a119 = 2.49360555267965238987089396762E0;
  static constexpr double a1110 = -3.0467644718982195003823669022E0;
  static constexpr double a121 = 2.27331014751653820792359768449E0;
  static constexpr double a124 = -1.05344954667372501984066689879E1;
  static constexpr double a125 = -2.00087205822486249909675718444E0;
  static constexpr double a126 = -1.79589318631187989172765950534E1;
  static constexpr double a127 = 2.79488845294199600508499808837E1;
  static constexpr double a128 = -2.85899827713502369474065508674E0;
  static constexpr double a129 = -8.87285693353062954433549289258E0;
  static constexpr double a1210 = 1.23605671757943030647266201528E1;
  static constexpr double a1211 = 6.43392746015763530355970484046E-1;

  static constexpr double a141 = 5.61675022830479523392909219681E-2;
  static constexpr double a147 = 2.53500210216624811088794765333E-1;
  static constexpr double a148 = -2.46239037470802489917441475441E-1;
  static constexpr double a149 = -1.24191423263816360469010140626E-1;
  static constexpr double a1410 = 1.5329179827876569731206322685E-1;
  static constexpr double a1411 = 8.20105229563468988491666602057E-3;
  static constexpr double a1412 = 7.56789766054569976138603589584E-3;
  static constexpr double a1413 = -8.298E-3;
  static constexpr double a151 = 3.18346481635021405060768473261E-2;
  static constexpr double a156 = 2.83009096723667755288322961402E-2;
  static constexpr double a157 = 5.35419883074385676223797384372E-2;
  static constexpr double a158 = -5.49237485713909884646569340306E-2;
  static constexpr double a1511 = -1.08347328697249322858509316994E-4;
  static constexpr double a1512 = 3.82571090835658412954920192323E-4;
  static constexpr double a1513 = -3.40465008687404560802977114492E-4;
  static constexpr double a1514 = 1.41312443674632500278074618366E-1;
  static constexpr double a161 = -4.28896301583791923408573538692E-1;
  static constexpr double a166 = -4.69762141536116384314449447206E0;
  static constexpr double a167 = 7.68342119606259904184240953878E0;
  static constexpr double a168 = 4.06898981839711007970213554331E0;
  static constexpr double a169 = 3.56727187455281109270669543021E-1;
  static constexpr double a1613 = -1.39902416515901462129418009734E-3;
  static constexpr double a1614 = 2.9475147891527723389556272149E0;
  static constexpr double a1615 = -9.15095847217987001081870187138E0;

  static constexpr double d41 = -0.84289382761090128651353491142E+01;
  static constexpr double d46 = 0.56671495351937776962531783590E+00;
  static constexpr double d47 = -0.30689499459498916912797304727E+01;
  static constexpr double d48 = 0.23846676565120698287728149680E+01;
  static constexpr double d49 = 0.21170345824450282767155149946E+01;
  static constexpr double d410 = -0.87139158377797299206789907490E+00;
  static constexpr double d411 = 0.22404374302607882758541771650E+01;
  static constexpr double d412 = 0.63157877876946881815570249290E+00;
  static constexpr double d413 = -0.88990336451333310820698117400E-01;
  static constexpr double d414 = 0.18148505520854727256656404962E+02;
  static constexpr double d415 = -0.91946323924783554000451984436E+01;
  static constexpr double d416 = -0.44360363875948939664310572000E+01;
  static constexpr double d51 = 0.10427508642579134603413151009E+02;
  static constexpr double d56 = 0.24228349177525818288430175319E+03;
  static constexpr double d57 = 0.16520045171727028198505394887E+03;
  static constexpr double d58 = -0.37454675472269020279518312152E+03;
  static constexpr double d59 = -0.22113666853125306036270938578E+02;
  static constexpr double d510 = 0.77334326684722638389603898808E+01;
  static constexpr double d511 = -0.30674084731089398182061213626E+02;
  static constexpr double d512 = -0.93321305264302278729567221706E+01;
  static constexpr double d513 = 0.15697238121770843886131091075E+02;
  static constexpr double d514 = -0.31139403219565177677282850411E+02;
  static constexpr double d515 = -0.93529243588444783865713862664E+01;
  static constexpr double d516 = 0.35816841486394083752465898540E+02;
  static constexpr double d61 = 0.19985053242002433820987653617E+02;
  static constexpr double d66 = -0.38703730874935176555105901742E+03;
  static constexpr double d67 = -0.18917813819516756882830838328E+03;
  static constexpr double d68 = 0.52780815920542364900561016686E+03;
  static constexpr double d69 = -0.11573902539959630126141871134E+02;
  static constexpr double d610 = 0.68812326946963000169666922661E+01;
  static constexpr double d611 = -0.10006050966910838403183860980E+01;
  static constexpr double d612 = 0.77771377980534432092869265740E+00;
  static constexpr double d613 = -0.27782057523535084065932004339E+01;
  static constexpr double d614 = -0.60196695231264120758267380846E+02;
  static constexpr double d615 = 0.84320405506677161018159903784E+02;
  static constexpr double d616 = 0.11992291136182789328035130030E+02;
  static constexpr double d71 = -0.25693933462703749003312586129E+02;
  static constexpr double d76 = -0.15418974869023643374053993627E+03;
  static constexpr double d77 = -0.23152937917604549567536039109E+03;
  static constexpr double d78 = 0.35763911791061412378285349910E+03;
  static constexpr double d79 = 0.93405324183624310003907691704E+02;
  static constexpr double d710 = -0.37458323136451633156875139351E+02;
  static constexpr double d711 = 0.10409964950896230045147246184E+03;
  static constexpr double d712 = 0.29840293426660503123344363579E+02;
  static constexpr double d713 = -0.43533456590011143754432175058E+02;
  static constexpr double d714 = 0.96324553959188282948394950600E+02;
  static constexpr double d715 = -0.39177261675615439165231486172E+02;
  static constexpr double d716 = -0.14972683625798562581422125276E+03;

  void stages() {
    const double h = h_;
    const double t = t_;
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * a21 * k1_[i];
    rhs_(t + c2 * h, w_.data(), k2_.data());
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(t + c3 * h, w_.data(), k3_.data());
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * (a41 * k1_[i] + a43 * k3_[i]);
    rhs_(t + c4 * h, w_.data(), k4_.data());
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * (a51 * k1_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs_(t + c5 * h, w_.data(), k5_.data());
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * (a61 * k1_[i] + a64 * k4_[i] + a65 * k5_[i]);
    rhs_(t + c6 * h, w_.data(), k6_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a71 * k1_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    rhs_(t + c7 * h, w_.data(), k7_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a81 * k1_[i] + a84 * k4_[i] + a85 * k5_[i] + a86 * k6_[i] + a87 * k7_[i]);
    rhs_(t + c8 * h, w_.data(), k8_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a91 * k1_[i] + a94 * k4_[i] + a95 * k5_[i] + a96 * k6_[i] + a97 * k7_[i] +
                           a98 * k8_[i]);
    rhs_(t + c9 * h, w_.data(), k9_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a101 * k1_[i] + a104 * k4_[i] + a105 * k5_[i] + a106 * k6_[i] +
                           a107 * k7_[i] + a108 * k8_[i] + a109 * k9_[i]);
    rhs_(t + c10 * h, w_.data(), k10_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a111 * k1_[i] + a114 * k4_[i] + a115 * k5_[i] + a116 * k6_[i] +
                           a117 * k7_[i] + a118 * k8_[i] + a119 * k9_[i] + a1110 * k10_[i]);
    rhs_(t + c11 * h, w_.data(), k11_.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_[i] + h * (a121 * k1_[i] + a124 * k4_[i] + a125 * k5_[i] + a126 * k6_[i] +
                           a127 * k7_[i] + a128 * k8_[i] + a129 * k9_[i] + a1210 * k10_[i] +
                           a1211 * k11_[i]);
    rhs_(t + h, w_.data(), k12_.data());
    evals_ += 11;
    for (std::size_t i = 0; i < N; ++i) {
      bsum_[i] = b1 * k1_[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] + b9 * k9_[i] + b10 * k10_[i] +
                 b11 * k11_[i] + b12 * k12_[i];
      ynew_[i] = y_[i] + h * bsum_[i];
    }
  }

  double error_estimate() const {
    double err = 0.0;
    double err2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = 1.0 / (opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i])));
      double sqr = (bsum_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k12_[i]) * sk;
      err2 += sqr * sqr;
      sqr = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] + er10 * k10_[i] +
             er11 * k11_[i] + er12 * k12_[i]) *
            sk;
      err += sqr * sqr;
    }
    const double deno = err + 0.01 * err2;
    return err * std::sqrt(1.0 / (deno <= 0.0 ? double(N) : deno * double(N)));
  }

  double initial_step() {
    double dnf = 0.0;
    double dny = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = opt_.atol + opt_.rtol * std::abs(y_[i]);
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y_[i] / sk) * (y_[i] / sk);
    }
    const double hmax = opt_.h_max > 0.0 ? opt_.h_max : 1e300;
    double h = std::min((dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01, hmax) * dir_;
    for (std::size_t i = 0; i < N; ++i) w_[i] = y_[i] + h * k1_[i];
    rhs_(t_ + h, w_.data(), k2_.data());
    ++evals_;
    double der2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sqr = (k2_[i] - k1_[i]) / (opt_.atol + opt_.rtol * std::abs(y_[i]));
      der2 += sqr * sqr;
    }
    der2 = std::sqrt(der2) / std::abs(h);
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.125);
    return std::min(100.0 * std::abs(h), std::min(h1, hmax)) * dir_;
  }

  // Builds the seventh-order interpolant of the last accepted step. Stage
  // buffers k1_old_, k6..k12 and fnew_ still hold that step's values.
  void prepare_dense() {
    const double h = h_used_;
    const double t = t_old_;
    State rc5, rc6, rc7, rc8;
    for (std::size_t i = 0; i < N; ++i) {
      rc1_[i] = y_old_[i];
      const double ydiff = y_[i] - y_old_[i];
      rc2_[i] = ydiff;
      const double bspl = h * k1_old_[i] - ydiff;
      rc3_[i] = bspl;
      rc4_[i] = ydiff - h * fnew_[i] - bspl;
      rc5[i] = d41 * k1_old_[i] + d46 * k6_[i] + d47 * k7_[i] + d48 * k8_[i] + d49 * k9_[i] + d410 * k10_[i] +
               d411 * k11_[i] + d412 * k12_[i];
      rc6[i] = d51 * k1_old_[i] + d56 * k6_[i] + d57 * k7_[i] + d58 * k8_[i] + d59 * k9_[i] + d510 * k10_[i] +
               d511 * k11_[i] + d512 * k12_[i];
      rc7[i] = d61 * k1_old_[i] + d66 * k6_[i] + d67 * k7_[i] + d68 * k8_[i] + d69 * k9_[i] + d610 * k10_[i] +
               d611 * k11_[i] + d612 * k12_[i];
      rc8[i] = d71 * k1_old_[i] + d76 * k6_[i] + d77 * k7_[i] + d78 * k8_[i] + d79 * k9_[i] + d710 * k10_[i] +
               d711 * k11_[i] + d712 * k12_[i];
    }
    State k14, k15, k16;
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_old_[i] + h * (a141 * k1_old_[i] + a147 * k7_[i] + a148 * k8_[i] + a149 * k9_[i] +
                               a1410 * k10_[i] + a1411 * k11_[i] + a1412 * k12_[i] + a1413 * fnew_[i]);
    rhs_(t + c14 * h, w_.data(), k14.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_old_[i] + h * (a151 * k1_old_[i] + a156 * k6_[i] + a157 * k7_[i] + a158 * k8_[i] +
                               a1511 * k11_[i] + a1512 * k12_[i] + a1513 * fnew_[i] + a1514 * k14[i]);
    rhs_(t + c15 * h, w_.data(), k15.data());
    for (std::size_t i = 0; i < N; ++i)
      w_[i] = y_old_[i] + h * (a161 * k1_old_[i] + a166 * k6_[i] + a167 * k7_[i] + a168 * k8_[i] +
                               a169 * k9_[i] + a1613 * fnew_[i] + a1614 * k14[i] + a1615 * k15[i]);
    rhs_(t + c16 * h, w_.data(), k16.data());
    evals_ += 3;
    for (std::size_t i = 0; i < N; ++i) {
      rc5_[i] = h * (rc5[i] + d413 * fnew_[i] + d414 * k14[i] + d415 * k15[i] + d416 * k16[i]);
      rc6_[i] = h * (rc6[i] + d513 * fnew_[i] + d514 * k14[i] + d515 * k15[i] + d516 * k16[i]);
      rc7_[i] = h * (rc7[i] + d613 * fnew_[i] + d614 * k14[i] + d615 * k15[i] + d616 * k16[i]);
      rc8_[i] = h * (rc8[i] + d713 * fnew_[i] + d714 * k14[i] + d715 * k15[i] + d716 * k16[i]);
    }
    dense_ready_ = true;
  }

  Rhs rhs_;
  Dop853Options opt_;
  double t_ = 0.0, t_old_ = 0.0, h_ = 0.0, h_used_ = 0.0, dir_ = 1.0;
  bool reject_ = false, dense_ready_ = false;
  long accepted_ = 0, rejected_ = 0, evals_ = 0;
  State y_{}, y_old_{}, ynew_{}, w_{}, bsum_{}, fnew_{};
  State k1_{}, k1_old_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{}, k8_{}, k9_{}, k10_{}, k11_{}, k12_{};
  State rc1_{}, rc2_{}, rc3_{}, rc4_{}, rc5_{}, rc6_{}, rc7_{}, rc8_{};
};

}  // namespace wsb
