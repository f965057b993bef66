use std::ffi::CStr;
use std::ptr;

use ehmmse_ffi::*;

fn last_error() -> String {
    let p = eh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Models {
    sig: *mut EhSignalModel,
    arr: *mut EhArrivalModel,
}

impl Models {
    fn reference() -> Self {
        let mut sig = ptr::null_mut();
        let mut arr = ptr::null_mut();
        unsafe {
            assert_eq!(eh_signal_lowpass_new(256, 4, 256.0, 0.0256, &mut sig), EhStatus::Ok);
            assert_eq!(eh_arrival_bernoulli_new(0.4, 1.0, &mut arr), EhStatus::Ok);
        }
        Self { sig, arr }
    }
}

impl Drop for Models {
    fn drop(&mut self) {
        unsafe {
            eh_signal_free(self.sig);
            eh_arrival_free(self.arr);
        }
    }
}

#[test]
fn handles_and_stats() {
    let m = Models::reference();
    let (mut lo, mut hi) = (0.0, 0.0);
    unsafe {
        assert_eq!(eh_signal_eta(m.sig, &mut lo, &mut hi), EhStatus::Ok);
    }
    assert_eq!(lo, 4.0 / 256.0);
    assert_eq!(hi, 4.0 / 256.0);
    let (mut mean, mut var, mut emax, mut ratio) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(eh_arrival_stats(m.arr, &mut mean, &mut var, &mut emax, &mut ratio), EhStatus::Ok);
    }
    assert!((mean - 0.4).abs() < 1e-15 && (var - 0.24).abs() < 1e-15);
    assert_eq!(emax, 1.0);
    assert!((ratio - 2.5).abs() < 1e-15);
}

#[test]
fn benchmark_and_deterministic_mmse_agree() {
    let m = Models::reference();
    let mut bench = 0.0;
    unsafe {
        assert_eq!(eh_offline_benchmark(m.sig, 0.4 * 256.0, &mut bench), EhStatus::Ok);
    }
    assert!((bench - 256.0 / 1001.0).abs() < 1e-12);
    // uniform gain spending 0.4 per sample: b = 0.4 / sigma_t^2 with sigma_t^2 = 1
    let diag = vec![0.4; 256];
    let mut eps = 0.0;
    unsafe {
        assert_eq!(eh_mmse_closed_form(m.sig, diag.as_ptr(), diag.len(), &mut eps), EhStatus::Ok);
    }
    assert!((eps - bench).abs() < 1e-12 * bench);
}

#[test]
fn bounds_through_the_abi() {
    let m = Models::reference();
    let mut p = std::mem::MaybeUninit::<EhBoundPoint>::uninit();
    unsafe {
        assert_eq!(eh_bound_i(m.sig, m.arr, 8, 32.0, EhTail::Bt, p.as_mut_ptr()), EhStatus::Ok);
    }
    let p = unsafe { p.assume_init() };
    assert_eq!(p.family, EhFamily::I);
    assert!(p.gamma.is_nan());
    assert!((p.mu - 12.0).abs() < 1e-12);

    let mut q = std::mem::MaybeUninit::<EhBoundPoint>::uninit();
    unsafe {
        assert_eq!(eh_bound_ii(m.sig, m.arr, 4, 10.0, 5.0, EhTail::Bn, q.as_mut_ptr()), EhStatus::Ok);
    }
    let q = unsafe { q.assume_init() };
    assert!((q.p_bar - 0.5248).abs() < 1e-12);

    let mut e = std::mem::MaybeUninit::<EhBoundPoint>::uninit();
    unsafe {
        assert_eq!(eh_bound_equidistant(m.sig, m.arr, 0.5, EhTail::Bt, e.as_mut_ptr()), EhStatus::Ok);
    }
    assert_eq!(unsafe { e.assume_init() }.family, EhFamily::IEquidistant);
}

#[test]
fn slot_tail_and_gains() {
    let m = Models::reference();
    let (mut v, mut se) = (0.0, 1.0);
    unsafe {
        assert_eq!(eh_slot_tail_probability(m.arr, 4, 2.0, &mut v, &mut se), EhStatus::Ok);
    }
    assert!((v - 0.5248).abs() < 1e-12);
    assert_eq!(se, 0.0);
    let energies = vec![1.0; 32];
    let mut gains = vec![0.0; 32];
    unsafe {
        assert_eq!(eh_gains_block(m.sig, 8, energies.as_ptr(), gains.as_mut_ptr(), 32), EhStatus::Ok);
    }
    // S_k = 8 * P_x / N = 8
    assert!(gains.iter().all(|g| (g - 0.125).abs() < 1e-15));
}

#[test]
fn campaign_is_reproducible() {
    let m = Models::reference();
    let mut a = vec![0.0; 16];
    let mut b = vec![0.0; 16];
    let (mut pa, mut pb) = (0.0, 0.0);
    unsafe {
        assert_eq!(eh_run_campaign(m.sig, m.arr, 8, 16, 2.56, 9, a.as_mut_ptr(), &mut pa), EhStatus::Ok);
        assert_eq!(eh_run_campaign(m.sig, m.arr, 8, 16, 2.56, 9, b.as_mut_ptr(), &mut pb), EhStatus::Ok);
    }
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    assert!(a.iter().all(|e| *e > 0.0 && *e <= 256.0));
}

#[test]
fn error_codes_and_messages() {
    let mut sig = ptr::null_mut();
    unsafe {
        assert_eq!(eh_signal_lowpass_new(8, 9, 8.0, 1.0, &mut sig), EhStatus::InvalidArgument);
    }
    assert!(sig.is_null());
    assert!(last_error().contains('s'));
    unsafe {
        assert_eq!(eh_signal_lowpass_new(8, 2, 8.0, 1.0, ptr::null_mut()), EhStatus::NullPointer);
    }
    assert!(last_error().contains("out_model"));
    let m = Models::reference();
    let mut p = std::mem::MaybeUninit::<EhBoundPoint>::uninit();
    unsafe {
        assert_eq!(eh_bound_i(m.sig, m.arr, 8, 1e6, EhTail::Bt, p.as_mut_ptr()), EhStatus::InvalidArgument);
        assert_eq!(eh_bound_i(ptr::null(), m.arr, 8, 1.0, EhTail::Bt, p.as_mut_ptr()), EhStatus::NullPointer);
    }
    let cols_re = [1.0, 0.0, 0.0, 1.0];
    let cols_im = [0.0; 4];
    let mut had = ptr::null_mut();
    let mut e = std::mem::MaybeUninit::<EhBoundPoint>::uninit();
    unsafe {
        assert_eq!(
            eh_signal_columns_new(2, 2, cols_re.as_ptr(), cols_im.as_ptr(), 2.0, 1.0, &mut had),
            EhStatus::Ok
        );
        assert_eq!(eh_bound_equidistant(had, m.arr, 0.5, EhTail::Bt, e.as_mut_ptr()), EhStatus::NotStationary);
        eh_signal_free(had);
        eh_signal_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(eh_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
