#!/usr/bin/env python3
"""Emit the avionics modeling corpus script (corpus/avionics.crud).

Builds an integrated-modular-avionics style meta-model (level 2) and a
fully populated aircraft configuration (level 1).  Every attribute gets a
datatype and a unit, every instance sets every effective attribute value,
so validation reports zero errors.  Run from the repository root:

    python3 tools/build_corpus.py
"""

import os
import sys

KIND_COUNTERS = {}
LINES = []


def emit(line=""):
    LINES.append(line)


def q(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def create(kind):
    counter = "Instance" if ":" in kind else kind
    KIND_COUNTERS[counter] = KIND_COUNTERS.get(counter, 0) + 1
    emit(f"create {kind}")
    return f"{counter}:{KIND_COUNTERS[counter]}"


def up(eid, feature, value, pos=1):
    emit(f"update {eid} {feature} {pos} {value}")


class Model:
    def __init__(self):
        self.ns = {}
        self.dt = {}
        self.unit = {}
        self.cls = {}
        self.cls_ns = {}
        self.attrs = {}       # class name -> [(attr id, literal fn)]
        self.parents = {}     # class name -> parent class name
        self.rels = {}        # rel name -> (id, kind, source, target)
        self.cls_list_len = {}

    # -- level 2 -----------------------------------------------------------

    def namespace(self, name, parent=None):
        nid = create("Namespace")
        up(nid, "name", q(name))
        holder = self.ns[parent] if parent else "RootFolder:1"
        feature_pos = self.cls_list_len.setdefault((holder, "namespaces"), 0) + 1
        self.cls_list_len[(holder, "namespaces")] = feature_pos
        up(holder, "namespaces", nid, feature_pos)
        self.ns[name] = nid
        return nid

    def datatype(self, name, primitive):
        did = create("DataType")
        up(did, "name", q(name))
        up(did, "primitive", q(primitive))
        self.dt[name] = did
        return did

    def unit_of(self, name, symbol):
        uid = create("Unit")
        up(uid, "name", q(name))
        up(uid, "symbol", q(symbol))
        self.unit[name] = uid
        return uid

    def clazz(self, name, namespace, physical=False):
        cid = create("Class")
        up(cid, "name", q(name))
        if physical:
            up(cid, "classification", q("physical"))
        holder = self.ns[namespace]
        pos = self.cls_list_len.setdefault((holder, "classes"), 0) + 1
        self.cls_list_len[(holder, "classes")] = pos
        up(holder, "classes", cid, pos)
        self.cls[name] = cid
        self.cls_ns[name] = namespace
        self.attrs.setdefault(name, [])
        return cid

    def attribute(self, cls_name, name, dtname, unitname, literal, lower=None, upper=None):
        aid = create("Attribute")
        up(aid, "name", q(name))
        up(aid, "datatype", self.dt[dtname])
        up(aid, "unit", self.unit[unitname])
        if lower is not None:
            up(aid, "lower", str(lower))
        if upper is not None:
            up(aid, "upper", str(upper))
        cid = self.cls[cls_name]
        pos = self.cls_list_len.setdefault((cid, "attributes"), 0) + 1
        self.cls_list_len[(cid, "attributes")] = pos
        up(cid, "attributes", aid, pos)
        self.attrs[cls_name].append((aid, literal))
        return aid

    def inherit(self, child, parent):
        iid = create("Inheritance")
        up(iid, "subclass", self.cls[child])
        up(iid, "superclass", self.cls[parent])
        up(self.cls[child], "parent", iid)
        self.parents[child] = parent

    def relation(self, kind, name, source, target, lower=None, upper=None):
        rid = create(kind)
        up(rid, "name", q(name))
        up(rid, "source", self.cls[source])
        up(rid, "target", self.cls[target])
        if lower is not None:
            up(rid, "lower", str(lower))
        if upper is not None:
            up(rid, "upper", str(upper))
        list_name = "compositions" if kind == "Composition" else "associations"
        cid = self.cls[source]
        pos = self.cls_list_len.setdefault((cid, list_name), 0) + 1
        self.cls_list_len[(cid, list_name)] = pos
        up(cid, list_name, rid, pos)
        self.rels[name] = (rid, kind, source, target)
        return rid

    # -- level 1 -----------------------------------------------------------

    def chain_attrs(self, cls_name):
        out = []
        current = cls_name
        while current is not None:
            out.extend(self.attrs.get(current, ()))
            current = self.parents.get(current)
        return out

    def instance(self, cls_name, name, physical=False, overrides=None):
        iid = create(self.cls[cls_name])
        up(iid, "name", q(name))
        if physical:
            up(iid, "classification", q("physical"))
        overrides = overrides or {}
        for aid, literal in self.chain_attrs(cls_name):
            value = overrides.get(aid, literal)
            values = value if isinstance(value, (list, tuple)) else [value]
            for pos, token in enumerate(values, start=1):
                up(iid, aid, token, pos)
        return iid

    def link(self, holder, rel_name, value):
        rid, _, _, _ = self.rels[rel_name]
        pos = self.cls_list_len.setdefault((holder, rid), 0) + 1
        self.cls_list_len[(holder, rid)] = pos
        up(holder, rid, value, pos)


def build():
    m = Model()

    emit("# avionics platform corpus: meta-model (level 2) and configuration (level 1)")
    emit(f"update RootFolder:1 name 1 {q('corpus')}")
    emit()
    emit("# namespaces")
    m.namespace("avionics")
    for child in ("hardware", "sensors", "software", "network", "power"):
        m.namespace(child, parent="avionics")

    emit()
    emit("# datatypes and units")
    m.datatype("Text", "string")
    m.datatype("Count", "integer")
    m.datatype("Measure", "real")
    m.datatype("Flag", "boolean")
    for name, symbol in (
        ("kilogram", "kg"), ("meter", "m"), ("watt", "W"), ("volt", "V"),
        ("ampere", "A"), ("hertz", "Hz"), ("megahertz", "MHz"),
        ("degree-celsius", "degC"), ("second", "s"), ("millisecond", "ms"),
        ("megabyte", "MB"), ("megabit-per-second", "Mbps"), ("percent", "pct"),
        ("g-force", "g"), ("kilopascal", "kPa"), ("dimensionless", "-"),
    ):
        m.unit_of(name, symbol)

    emit()
    emit("# hardware classes")
    m.clazz("HardwareComponent", "hardware", physical=True)
    m.attribute("HardwareComponent", "mass", "Measure", "kilogram", "1.5")
    m.attribute("HardwareComponent", "partNumber", "Text", "dimensionless", q("PN-0000"))
    m.attribute("HardwareComponent", "powerConsumption", "Measure", "watt", "10.0")
    m.attribute("HardwareComponent", "operatingTempMax", "Measure", "degree-celsius", "70.0")

    for name, rows in (
        ("Cabinet", [("slotCount", "Count", "dimensionless", "8"),
                     ("coolingCapacity", "Measure", "watt", "450.0")]),
        ("ProcessingModule", [("clockFrequency", "Measure", "megahertz", "800.0"),
                              ("coreCount", "Count", "dimensionless", "4"),
                              ("memoryCapacity", "Count", "megabyte", "2048")]),
        ("IoModule", [("channelCount", "Count", "dimensionless", "32")]),
        ("PowerSupplyUnit", [("outputVoltage", "Measure", "volt", "28.0"),
                             ("maxCurrent", "Measure", "ampere", "35.0"),
                             ("efficiency", "Measure", "percent", "91.5")]),
        ("NetworkSwitch", [("portCount", "Count", "dimensionless", "24"),
                           ("switchingLatency", "Measure", "millisecond", "0.12")]),
        ("Display", [("resolutionX", "Count", "dimensionless", "1920"),
                     ("resolutionY", "Count", "dimensionless", "1080"),
                     ("brightness", "Measure", "percent", "80.0")]),
        ("Enclosure", [("ipRating", "Text", "dimensionless", q("IP54"))]),
    ):
        m.clazz(name, "hardware", physical=True)
        m.inherit(name, "HardwareComponent")
        for attr in rows:
            m.attribute(name, *attr)

    m.clazz("Connector", "hardware", physical=True)
    m.attribute("Connector", "pinCount", "Count", "dimensionless", "64")
    m.clazz("Harness", "hardware", physical=True)
    m.attribute("Harness", "length", "Measure", "meter", "3.25")
    m.attribute("Harness", "wireGauge", "Count", "dimensionless", "22")

    emit()
    emit("# sensor classes")
    m.clazz("Sensor", "sensors", physical=True)
    m.inherit("Sensor", "HardwareComponent")
    m.attribute("Sensor", "sampleRate", "Measure", "hertz", "50.0")
    m.attribute("Sensor", "accuracy", "Measure", "percent", "0.5")
    for name, rows in (
        ("AirDataSensor", [("pressureRangeMax", "Measure", "kilopascal", "115.0")]),
        ("InertialSensor", [("gRange", "Measure", "g-force", "16.0"),
                            ("driftRate", "Measure", "percent", "0.01")]),
        ("TemperatureSensor", [("rangeMin", "Measure", "degree-celsius", "-55.0"),
                               ("rangeMax", "Measure", "degree-celsius", "125.0")]),
        ("RadarAltimeter", [("ceiling", "Measure", "meter", "1500.0")]),
        ("GnssReceiver", [("trackedChannels", "Count", "dimensionless", "12")]),
    ):
        m.clazz(name, "sensors", physical=True)
        m.inherit(name, "Sensor")
        for attr in rows:
            m.attribute(name, *attr)

    emit()
    emit("# software classes")
    m.clazz("SoftwareComponent", "software")
    m.attribute("SoftwareComponent", "version", "Text", "dimensionless", q("1.0.0"))
    m.attribute("SoftwareComponent", "criticality", "Text", "dimensionless", q("DAL-C"))
    for name, rows in (
        ("Partition", [("memoryBudget", "Count", "megabyte", "256"),
                       ("timeBudget", "Measure", "millisecond", "5.0")]),
        ("Application", [("updateRate", "Measure", "hertz", "20.0")]),
        ("Task", [("period", "Measure", "millisecond", "10.0"),
                  ("deadline", "Measure", "millisecond", "8.0"),
                  ("wcet", "Measure", "millisecond", "1.5")]),
    ):
        m.clazz(name, "software")
        m.inherit(name, "SoftwareComponent")
        for attr in rows:
            m.attribute(name, *attr)
    for name, parent, rows in (
        ("HealthMonitor", "Application", [("checkInterval", "Measure", "millisecond", "100.0")]),
        ("DataLogger", "Application", [("bufferSize", "Count", "megabyte", "64")]),
    ):
        m.clazz(name, "software")
        m.inherit(name, parent)
        for attr in rows:
            m.attribute(name, *attr)

    emit()
    emit("# network classes")
    m.clazz("DataBus", "network")
    m.attribute("DataBus", "bandwidth", "Measure", "megabit-per-second", "100.0")
    m.attribute("DataBus", "redundancyLevel", "Count", "dimensionless", "2")
    m.clazz("BusChannel", "network")
    m.attribute("BusChannel", "latencyBudget", "Measure", "millisecond", "2.0")
    m.clazz("Message", "network")
    m.attribute("Message", "payloadSize", "Count", "dimensionless", "512")
    m.attribute("Message", "transmitRate", "Measure", "hertz", "10.0")
    m.clazz("Port", "network")
    m.attribute("Port", "direction", "Text", "dimensionless", q("out"))
    m.attribute("Port", "queueDepth", "Count", "dimensionless", "16")
    m.clazz("VirtualLink", "network")
    m.attribute("VirtualLink", "bag", "Measure", "millisecond", "4.0")
    m.attribute("VirtualLink", "maxFrameSize", "Count", "dimensionless", "1518")

    emit()
    emit("# power and architecture classes")
    m.clazz("PowerBusbar", "power", physical=True)
    m.attribute("PowerBusbar", "nominalVoltage", "Measure", "volt", "28.0")
    m.clazz("CircuitBreaker", "power", physical=True)
    m.attribute("CircuitBreaker", "tripCurrent", "Measure", "ampere", "15.0")
    m.clazz("Aircraft", "avionics", physical=True)
    m.attribute("Aircraft", "tailNumber", "Text", "dimensionless", q("D-0000"))
    m.attribute("Aircraft", "emptyWeight", "Measure", "kilogram", "4200.0")
    m.attribute("Aircraft", "configTags", "Text", "dimensionless", q("baseline"),
                lower=0, upper="*")
    m.clazz("AvionicsSuite", "avionics")
    m.attribute("AvionicsSuite", "dalLevel", "Text", "dimensionless", q("DAL-B"))
    m.clazz("OperationalMode", "avionics")
    m.attribute("OperationalMode", "modeCode", "Count", "dimensionless", "1")

    emit()
    emit("# compositions")
    m.relation("Composition", "suite", "Aircraft", "AvionicsSuite", lower=1, upper=1)
    m.relation("Composition", "busbars", "Aircraft", "PowerBusbar", upper="*")
    m.relation("Composition", "cabinets", "AvionicsSuite", "Cabinet", upper=4)
    m.relation("Composition", "switches", "AvionicsSuite", "NetworkSwitch", upper="*")
    m.relation("Composition", "displays", "AvionicsSuite", "Display", upper="*")
    m.relation("Composition", "sensors", "AvionicsSuite", "Sensor", upper="*")
    m.relation("Composition", "processingModules", "Cabinet", "ProcessingModule", upper=8)
    m.relation("Composition", "ioModules", "Cabinet", "IoModule", upper=8)
    m.relation("Composition", "powerSupplies", "Cabinet", "PowerSupplyUnit", upper=2)
    m.relation("Composition", "partitions", "ProcessingModule", "Partition", upper="*")
    m.relation("Composition", "applications", "Partition", "Application", upper="*")
    m.relation("Composition", "tasks", "Application", "Task", upper="*")
    m.relation("Composition", "ports", "Application", "Port", upper="*")
    m.relation("Composition", "virtualLinks", "DataBus", "VirtualLink", upper="*")

    emit()
    emit("# associations")
    m.relation("Association", "hostedOn", "Partition", "ProcessingModule", upper=1)
    m.relation("Association", "uplink", "NetworkSwitch", "DataBus", upper=1)
    m.relation("Association", "routedThrough", "VirtualLink", "NetworkSwitch", upper="*")
    m.relation("Association", "boundTo", "Port", "VirtualLink", upper=1)
    m.relation("Association", "feeds", "Sensor", "Application", upper="*")
    m.relation("Association", "protects", "CircuitBreaker", "PowerBusbar", upper=1)
    m.relation("Association", "shows", "Display", "Application", upper="*")
    m.relation("Association", "monitors", "HealthMonitor", "Partition", upper="*")
    m.relation("Association", "sends", "Task", "Message", upper="*")

    emit()
    emit("# level 1: aircraft configuration")
    acft = m.instance("Aircraft", "D-ALPS", physical=True, overrides={
        m.attrs["Aircraft"][0][0]: q("D-ALPS"),
        m.attrs["Aircraft"][2][0]: [q("baseline"), q("cold-weather")],
    })
    suite = m.instance("AvionicsSuite", "ima-suite-1")
    m.link(acft, "suite", suite)
    busbar1 = m.instance("PowerBusbar", "busbar-ess", physical=True)
    busbar2 = m.instance("PowerBusbar", "busbar-main", physical=True)
    m.link(acft, "busbars", busbar1)
    m.link(acft, "busbars", busbar2)

    cabinets = []
    for side in ("left", "right"):
        cab = m.instance("Cabinet", f"cabinet-{side}", physical=True)
        cabinets.append(cab)
        m.link(suite, "cabinets", cab)

    modules = []
    for i, cab in ((1, cabinets[0]), (2, cabinets[0]), (3, cabinets[1]), (4, cabinets[1])):
        pm = m.instance("ProcessingModule", f"cpm-{i}", physical=True)
        modules.append(pm)
        m.link(cab, "processingModules", pm)
    for i, cab in ((1, cabinets[0]), (2, cabinets[1])):
        io = m.instance("IoModule", f"iom-{i}", physical=True)
        m.link(cab, "ioModules", io)
    for i, cab in ((1, cabinets[0]), (2, cabinets[1])):
        psu = m.instance("PowerSupplyUnit", f"psu-{i}", physical=True)
        m.link(cab, "powerSupplies", psu)

    switches = []
    for i in (1, 2):
        sw = m.instance("NetworkSwitch", f"afdx-switch-{i}", physical=True)
        switches.append(sw)
        m.link(suite, "switches", sw)
    displays = []
    for i in (1, 2):
        disp = m.instance("Display", f"mfd-{i}", physical=True)
        displays.append(disp)
        m.link(suite, "displays", disp)

    sensor_specs = (
        ("AirDataSensor", "ads-1"), ("AirDataSensor", "ads-2"),
        ("InertialSensor", "iru-1"), ("InertialSensor", "iru-2"),
        ("TemperatureSensor", "oat-probe"), ("RadarAltimeter", "ra-1"),
        ("GnssReceiver", "gnss-1"),
    )
    sensors = []
    for cls_name, inst_name in sensor_specs:
        sensor = m.instance(cls_name, inst_name, physical=True)
        sensors.append(sensor)
        m.link(suite, "sensors", sensor)

    partitions = []
    for i, pm in ((1, modules[0]), (2, modules[1]), (3, modules[2]), (4, modules[3])):
        part = m.instance("Partition", f"partition-{i}")
        partitions.append(part)
        m.link(pm, "partitions", part)
        m.link(part, "hostedOn", pm)

    apps = []
    for name, part in (("fms", partitions[0]), ("ahrs", partitions[1]), ("ecam", partitions[2])):
        app = m.instance("Application", f"app-{name}")
        apps.append(app)
        m.link(part, "applications", app)
    monitors = []
    for i, part in ((1, partitions[0]), (2, partitions[3])):
        mon = m.instance("HealthMonitor", f"hm-{i}")
        monitors.append(mon)
        m.link(part, "applications", mon)
        m.link(mon, "monitors", part)
    logger = m.instance("DataLogger", "dl-1")
    m.link(partitions[3], "applications", logger)

    tasks = []
    all_apps = apps + monitors + [logger]
    for i in range(1, 9):
        task = m.instance("Task", f"task-{i}")
        tasks.append(task)
        m.link(all_apps[(i - 1) % len(all_apps)], "tasks", task)

    bus = m.instance("DataBus", "afdx-a")
    vlinks = []
    for i in (1, 2, 3):
        vl = m.instance("VirtualLink", f"vl-{i}")
        vlinks.append(vl)
        m.link(bus, "virtualLinks", vl)
        m.link(vl, "routedThrough", switches[(i - 1) % 2])
    for sw in switches:
        m.link(sw, "uplink", bus)

    ports = []
    for i in range(1, 7):
        port = m.instance("Port", f"port-{i}")
        ports.append(port)
        m.link(all_apps[(i - 1) % len(all_apps)], "ports", port)
        m.link(port, "boundTo", vlinks[(i - 1) % 3])

    messages = []
    for i in (1, 2):
        msg = m.instance("Message", f"msg-{i}")
        messages.append(msg)
    for i, task in enumerate(tasks[:4]):
        m.link(task, "sends", messages[i % 2])

    for sensor, app in zip(sensors, (apps[1], apps[1], apps[1], apps[1], apps[2], apps[0], apps[0])):
        m.link(sensor, "feeds", app)
    for disp in displays:
        m.link(disp, "shows", apps[2])

    breakers = []
    for i, bb in ((1, busbar1), (2, busbar2)):
        brk = m.instance("CircuitBreaker", f"cb-{i}", physical=True)
        breakers.append(brk)
        m.link(brk, "protects", bb)

    m.instance("Enclosure", "enclosure-1", physical=True)
    for i in (1, 2):
        m.instance("Connector", f"connector-{i}", physical=True)
    for i in (1, 2):
        m.instance("Harness", f"harness-{i}", physical=True)
    m.instance("OperationalMode", "mode-normal")
    m.instance("BusChannel", "chan-a")

    emit()
    emit("# spot checks")
    emit("read Class:1 name")
    emit(f"read {acft} {m.attrs['Aircraft'][0][0]}")
    emit(f"read {suite} name")

    counts = dict(KIND_COUNTERS)
    return counts


def main():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    counts = build()
    path = os.path.join(root, "corpus", "avionics.crud")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(LINES) + "\n")
    request_count = sum(1 for l in LINES if l and not l.startswith("#"))
    print(f"wrote {path}: {request_count} requests")
    for kind, count in sorted(counts.items()):
        print(f"  {kind:12s} {count}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
