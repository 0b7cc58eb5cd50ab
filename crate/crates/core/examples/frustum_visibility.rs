//! Which scene objects a camera can see, by bounding sphere.
//!
//!     cargo run --example frustum_visibility

use cluecart::capture::{sphere_in_frustum, CameraState, ScreenRect, Vec3};

fn main() {
    let camera = CameraState {
        position: Vec3::new(0.0, 2.0, 15.0),
        forward: Vec3::new(0.0, 0.0, -1.0),
        up: Vec3::new(0.0, 1.0, 0.0),
        vfov_deg: 60.0,
        aspect: 16.0 / 9.0,
        near: 0.1,
        far: 100.0,
        ui_rect: ScreenRect { min_x: 0.0, min_y: 0.0, max_x: 1920.0, max_y: 1080.0 },
    };

    let objects = [
        ("The Knight", Vec3::new(0.0, 0.0, 0.0), 1.5),
        ("Elderbug", Vec3::new(6.0, 0.0, 0.0), 1.5),
        ("Zote (behind camera)", Vec3::new(0.0, 0.0, 30.0), 1.5),
        ("Hornet (far off to the side)", Vec3::new(80.0, 0.0, 0.0), 1.5),
        ("Dirtmouth", Vec3::new(0.0, 0.0, -10.0), 25.0),
        ("Abyss (past the far plane)", Vec3::new(0.0, 0.0, -120.0), 10.0),
    ];

    let frustum = camera.frustum().expect("valid camera");
    for (name, center, radius) in objects {
        let visible = sphere_in_frustum(&camera, &center, radius).unwrap();
        // Negative margin means the sphere is fully outside some plane.
        let margin = frustum.min_distance(&center) + radius;
        println!("{:<30} visible={:<5} margin={margin:>8.2}", name, visible);
    }

    let mut broken = camera.clone();
    broken.up = broken.forward;
    println!("\nup parallel to forward: {}", sphere_in_frustum(&broken, &Vec3::zeros(), 1.0).unwrap_err());
}
