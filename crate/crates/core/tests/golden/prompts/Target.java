public class Target {
    public static int main(String[] args) {
        int free = 10;
        int used = 0;
        while (used < 3) {
            free = free - 2;
            used++;
        }
        return free;
    }
}
