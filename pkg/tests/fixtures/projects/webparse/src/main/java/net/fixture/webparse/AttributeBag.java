package net.fixture.webparse;

import java.util.HashMap;
import java.util.Map;

public class AttributeBag {

    private final Map<String, String> attributes = new HashMap<String, String>();

    public void put(String key, String value) {
        attributes.put(key.toLowerCase(), value);
    }

    public String get(String key) {
        return attributes.get(key.toLowerCase());
    }
}
