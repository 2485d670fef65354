"""Bridge from an optimized grasp state to a serializable record."""

from .dataset import SCHEMA_VERSION, GraspRecord
from .hand import forward_kinematics
from .objects import contact_sample_rng
from .quality import find_contacts, penetration_depth_cm, q1, validate


def evaluate_grasp(hand, obj, state, weights, config, q1_config, master_seed, seed):
    """Quality metrics and flags for one final grasp state.

    The contact-search rng derives from (seed, object, scale) so a later
    eval pass recomputes identical contacts and Q1 from the record alone.
    """
    posed = forward_kinematics(hand, state.pose)
    rng = contact_sample_rng(seed, obj.object_id, obj.scale)
    contacts = find_contacts(hand, posed, obj.mesh, q1_config.contact_threshold,
                             q1_config.samples_per_link, rng)
    pen_cm = penetration_depth_cm(hand, posed, obj.samples.points)
    q1_value = q1(contacts, q1_config, pen_cm)
    flags = validate(pen_cm, len(contacts), q1_value, q1_config)
    if state.failed:
        flags["valid"] = False
    return GraspRecord(
        object_id=obj.object_id,
        scale=obj.scale,
        translation=[float(x) for x in state.pose.translation],
        rotation_quat_wxyz=[float(x) for x in state.pose.rotation],
        joint_angles=[float(x) for x in state.pose.theta],
        energy=state.energy.energies(),
        q1=float(q1_value),
        penetration_cm=float(pen_cm),
        flags=flags,
        seed=int(seed),
        meta={
            "schema_version": SCHEMA_VERSION,
            "weights": weights.to_dict(),
            "q1_config": q1_config.to_dict(),
            "iterations": config.iterations,
            "n_contacts": config.n_contacts,
            "hull_offset": config.hull_offset,
            "penetration_samples": config.penetration_samples,
            "master_seed": int(master_seed),
        },
    )
