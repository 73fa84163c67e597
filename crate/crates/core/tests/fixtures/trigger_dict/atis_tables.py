from collections import defaultdict


def get_trigger_dict(seqs, maps):
    merged_map = defaultdict(list)
    for seq in seqs:
        for trigger in seq:
            merged_map[
                trigger.lower()
            ].append(trigger)

    for m in maps:
        for key, values in m.items():
            merged_map[
                key.lower()
            ].extend(values)

    return merged_map


TRIGGER_LISTS = [["ARRIVE", "DEPART"]]
TRIGGER_DICTS = [{"depart": ["leave", "fly"]}]

get_trigger_dict(TRIGGER_LISTS, TRIGGER_DICTS)
